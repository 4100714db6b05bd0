/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/model/params.hpp
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

#include "facelearn/core/archive.hpp"

#include "Eigen/Core"

#include <filesystem>
#include <string>
#include <vector>

namespace facelearn {
namespace model {

/// Number of illumination coefficients: 9 SH bands x 3 color channels, band-major.
inline constexpr int num_sh_coefficients = 27;

/// Identity parameters shared by all frames of one subject.
struct IdentityParams
{
    Eigen::VectorXd alpha; ///< Geometry coefficients (g).
    Eigen::VectorXd beta;  ///< Appearance coefficients.

    friend bool operator==(const IdentityParams&, const IdentityParams&) = default;
};

/// Per-frame rigid pose, illumination and expression.
struct FrameParams
{
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero(); ///< Axis-angle, |rotation| < pi.
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(num_sh_coefficients); ///< gamma[3 * band + channel].
    Eigen::VectorXd delta;                                               ///< Blendshape weights (b).

    friend bool operator==(const FrameParams&, const FrameParams&) = default;
};

/// Everything optimised for one multi-frame sample: one identity, one FrameParams per frame.
struct SampleParams
{
    IdentityParams identity;
    std::vector<FrameParams> frames;

    friend bool operator==(const SampleParams&, const SampleParams&) = default;
};

/// Band-0 white light of the given intensity, all higher bands zero.
Eigen::VectorXd ambient_light(double intensity);

SampleParams zero_params(int identity_dim, int appearance_dim, int expression_dim, int num_frames);

/**
 * Stores the parameters under "<prefix>alpha", "<prefix>beta", "<prefix>num_frames" and
 * "<prefix>f<k>/rotation|translation|gamma|delta".
 */
void put_params(Archive& archive, const std::string& prefix, const SampleParams& params);
SampleParams get_params(const Archive& archive, const std::string& prefix);

/// Parameter store: one SampleParams per sample, prefixes "s<n>/".
void save_param_store(const std::vector<SampleParams>& store, const std::filesystem::path& path);
std::vector<SampleParams> load_param_store(const std::filesystem::path& path);

} // namespace model
} // namespace facelearn
