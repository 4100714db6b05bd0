/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/data/sample.cpp
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
#include "facelearn/data/sample.hpp"

#include <stdexcept>

namespace facelearn {
namespace data {

void LandmarkSet::validate() const
{
    if (positions.cols() != 66 || confidences.size() != 66)
        throw std::invalid_argument("landmark set: expected 66 entries, found " + std::to_string(positions.cols()));
    if (!positions.allFinite() || !confidences.allFinite())
        throw std::invalid_argument("landmark set: non-finite entry");
    if ((confidences.array() < 0.0).any() || (confidences.array() > 1.0).any())
        throw std::invalid_argument("landmark set: confidence outside [0, 1]");
}

void MultiFrameSample::validate() const
{
    if (frames.empty())
        throw std::invalid_argument("sample '" + subject + "' has no frames");
    for (const Frame& f : frames)
    {
        if (f.image.empty())
            throw std::invalid_argument("sample '" + subject + "': frame '" + f.name + "' has an empty image");
        if (f.image.width() != frames.front().image.width() || f.image.height() != frames.front().image.height())
            throw std::invalid_argument("sample '" + subject + "': frames differ in image size");
        f.landmarks.validate();
    }
    if (ground_truth && ground_truth->params.frames.size() != frames.size())
        throw std::invalid_argument("sample '" + subject + "': ground truth frame count differs");
}

MultiFrameSample MultiFrameSample::subset(const std::vector<int>& frame_indices) const
{
    MultiFrameSample out;
    out.subject = subject;
    if (ground_truth)
    {
        out.ground_truth = GroundTruth{};
        out.ground_truth->model_name = ground_truth->model_name;
        out.ground_truth->params.identity = ground_truth->params.identity;
    }
    for (int i : frame_indices)
    {
        if (i < 0 || i >= num_frames())
            throw std::invalid_argument("frame index " + std::to_string(i) + " out of range");
        out.frames.push_back(frames[static_cast<std::size_t>(i)]);
        if (ground_truth)
            out.ground_truth->params.frames.push_back(ground_truth->params.frames[static_cast<std::size_t>(i)]);
    }
    return out;
}

} // namespace data
} // namespace facelearn
