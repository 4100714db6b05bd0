/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/data/sample.hpp
 *
 * Copyright 2026 The facelearn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "facelearn/core/image.hpp"
#include "facelearn/model/params.hpp"

#include "Eigen/Core"

#include <optional>
#include <string>
#include <vector>

namespace facelearn {
namespace data {

/// 66 detected 2D feature points (pixels) with confidences in [0, 1].
struct LandmarkSet
{
    Eigen::Matrix2Xd positions = Eigen::Matrix2Xd::Zero(2, 66);
    Eigen::VectorXd confidences = Eigen::VectorXd::Zero(66);

    int size() const { return static_cast<int>(positions.cols()); }
    double mean_confidence() const { return confidences.size() ? confidences.mean() : 0.0; }

    /// Throws unless there are exactly 66 finite entries with confidences in [0, 1].
    void validate() const;

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

struct Frame
{
    std::string name;
    Image image;
    LandmarkSet landmarks;
};

/// Generating parameters of a synthetic sample.
struct GroundTruth
{
    model::SampleParams params;
    std::string model_name; ///< File name of the generator model, relative to the dataset root.
};

/// M frames of one subject, optionally with the parameters that produced them.
struct MultiFrameSample
{
    std::string subject;
    std::vector<Frame> frames;
    std::optional<GroundTruth> ground_truth;

    int num_frames() const { return static_cast<int>(frames.size()); }

    /// Non-empty, equal image sizes, valid landmark sets, ground truth frame count matches.
    void validate() const;

    /// Copy restricted to the given frame indices (ground truth restricted alike).
    MultiFrameSample subset(const std::vector<int>& frame_indices) const;
};

} // namespace data
} // namespace facelearn
