/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/model/params.cpp
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
#include "facelearn/model/params.hpp"

#include <stdexcept>

namespace facelearn {
namespace model {

Eigen::VectorXd ambient_light(double intensity)
{
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(num_sh_coefficients);
    gamma.head<3>().setConstant(intensity);
    return gamma;
}

SampleParams zero_params(int identity_dim, int appearance_dim, int expression_dim, int num_frames)
{
    SampleParams params;
    params.identity.alpha = Eigen::VectorXd::Zero(identity_dim);
    params.identity.beta = Eigen::VectorXd::Zero(appearance_dim);
    params.frames.resize(static_cast<std::size_t>(num_frames));
    for (auto& frame : params.frames)
        frame.delta = Eigen::VectorXd::Zero(expression_dim);
    return params;
}

void put_params(Archive& archive, const std::string& prefix, const SampleParams& params)
{
    archive.put(prefix + "alpha", params.identity.alpha);
    archive.put(prefix + "beta", params.identity.beta);
    archive.put_scalar(prefix + "num_frames", static_cast<double>(params.frames.size()));
    for (std::size_t k = 0; k < params.frames.size(); ++k)
    {
        const FrameParams& f = params.frames[k];
        const std::string fp = prefix + "f" + std::to_string(k) + "/";
        archive.put(fp + "rotation", Eigen::VectorXd(f.rotation));
        archive.put(fp + "translation", Eigen::VectorXd(f.translation));
        archive.put(fp + "gamma", f.gamma);
        archive.put(fp + "delta", f.delta);
    }
}

SampleParams get_params(const Archive& archive, const std::string& prefix)
{
    SampleParams params;
    params.identity.alpha = archive.vector(prefix + "alpha");
    params.identity.beta = archive.vector(prefix + "beta");
    const double count = archive.scalar(prefix + "num_frames");
    if (count < 0 || count != static_cast<int>(count))
        throw std::runtime_error("'" + prefix + "num_frames' is not a frame count");
    for (int k = 0; k < static_cast<int>(count); ++k)
    {
        const std::string fp = prefix + "f" + std::to_string(k) + "/";
        const Eigen::VectorXd rotation = archive.vector(fp + "rotation");
        const Eigen::VectorXd translation = archive.vector(fp + "translation");
        if (rotation.size() != 3 || translation.size() != 3)
            throw std::runtime_error("pose arrays under '" + fp + "' are not 3-vectors");
        FrameParams f;
        f.rotation = rotation;
        f.translation = translation;
        f.gamma = archive.vector(fp + "gamma");
        f.delta = archive.vector(fp + "delta");
        if (f.gamma.size() != num_sh_coefficients)
            throw std::runtime_error("'" + fp + "gamma' must have 27 coefficients");
        params.frames.push_back(std::move(f));
    }
    return params;
}

void save_param_store(const std::vector<SampleParams>& store, const std::filesystem::path& path)
{
    Archive archive;
    archive.put_scalar("num_samples", static_cast<double>(store.size()));
    for (std::size_t s = 0; s < store.size(); ++s)
        put_params(archive, "s" + std::to_string(s) + "/", store[s]);
    archive.save(path);
}

std::vector<SampleParams> load_param_store(const std::filesystem::path& path)
{
    const Archive archive = Archive::load(path);
    std::vector<SampleParams> store;
    try
    {
        const int n = static_cast<int>(archive.scalar("num_samples"));
        for (int s = 0; s < n; ++s)
            store.push_back(get_params(archive, "s" + std::to_string(s) + "/"));
    }
    catch (const std::exception& e)
    {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return store;
}

} // namespace model
} // namespace facelearn
