/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/autodiff/param_vector.cpp
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
#include "facelearn/autodiff/param_vector.hpp"

#include <stdexcept>

namespace facelearn {
namespace autodiff {

namespace {

const char* const kind_names[] = {"alpha", "beta", "rotation", "translation", "gamma",
                                  "delta", "geom_basis", "appear_basis", "appear_mean"};

} // namespace

std::string to_string(BlockKind kind)
{
    return kind_names[static_cast<int>(kind)];
}

BlockKind block_kind_from_string(const std::string& name)
{
    for (int k = 0; k < 9; ++k)
        if (name == kind_names[k])
            return static_cast<BlockKind>(k);
    throw std::invalid_argument("unknown parameter block kind '" + name + "'");
}

bool is_model_block(BlockKind kind)
{
    return kind == BlockKind::GeomBasis || kind == BlockKind::AppearBasis || kind == BlockKind::AppearMean;
}

void ParamVector::add_block(std::string name, BlockKind kind, int sample, int frame, Eigen::Index size)
{
    const Eigen::Index offset = blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().size;
    blocks_.push_back({std::move(name), kind, sample, frame, offset, size, true});
    if (sample < 0)
        model_blocks_.push_back(blocks_.size() - 1);
    else
        sample_blocks_[static_cast<std::size_t>(sample)].push_back(blocks_.size() - 1);
}

ParamVector ParamVector::pack(const model::FaceModel& model, const std::vector<model::SampleParams>& samples,
                              bool with_model)
{
    ParamVector p;
    p.sample_blocks_.resize(samples.size());
    if (with_model)
    {
        p.add_block("geom_basis", BlockKind::GeomBasis, -1, -1, model.geom_basis.size());
        p.add_block("appear_basis", BlockKind::AppearBasis, -1, -1, model.appear_basis.size());
        p.add_block("appear_mean", BlockKind::AppearMean, -1, -1, model.appear_mean.size());
        p.geom_rows_ = model.geom_basis.rows();
        p.geom_cols_ = model.geom_basis.cols();
        p.appear_rows_ = model.appear_basis.rows();
        p.appear_cols_ = model.appear_basis.cols();
    }
    for (std::size_t s = 0; s < samples.size(); ++s)
    {
        const auto& sp = samples[s];
        const std::string prefix = "s" + std::to_string(s) + "/";
        const int si = static_cast<int>(s);
        p.add_block(prefix + "alpha", BlockKind::Alpha, si, -1, sp.identity.alpha.size());
        p.add_block(prefix + "beta", BlockKind::Beta, si, -1, sp.identity.beta.size());
        for (std::size_t f = 0; f < sp.frames.size(); ++f)
        {
            const std::string fp = prefix + "f" + std::to_string(f) + "/";
            const int fi = static_cast<int>(f);
            p.add_block(fp + "rotation", BlockKind::Rotation, si, fi, 3);
            p.add_block(fp + "translation", BlockKind::Translation, si, fi, 3);
            p.add_block(fp + "gamma", BlockKind::Gamma, si, fi, sp.frames[f].gamma.size());
            p.add_block(fp + "delta", BlockKind::Delta, si, fi, sp.frames[f].delta.size());
        }
    }
    p.values.resize(p.blocks_.empty() ? 0 : p.blocks_.back().offset + p.blocks_.back().size);
    if (with_model)
        p.store_model(model);
    for (std::size_t s = 0; s < samples.size(); ++s)
        p.store_sample(static_cast<int>(s), samples[s]);
    return p;
}

std::optional<std::size_t> ParamVector::find(const std::string& name) const
{
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        if (blocks_[i].name == name)
            return i;
    return std::nullopt;
}

const ParamBlock& ParamVector::block(const std::string& name) const
{
    const auto i = find(name);
    if (!i)
        throw std::invalid_argument("no parameter block named '" + name + "'");
    return blocks_[*i];
}

const std::vector<std::size_t>& ParamVector::sample_blocks(int sample) const
{
    if (sample < 0 || sample >= num_samples())
        throw std::out_of_range("sample index " + std::to_string(sample) + " out of range");
    return sample_blocks_[static_cast<std::size_t>(sample)];
}

void ParamVector::set_active(BlockKind kind, bool active)
{
    for (auto& b : blocks_)
        if (b.kind == kind)
            b.active = active;
}

void ParamVector::set_active(const std::string& name, bool active)
{
    const auto i = find(name);
    if (!i)
        throw std::invalid_argument("no parameter block named '" + name + "'");
    blocks_[*i].active = active;
}

void ParamVector::set_all_active(bool active)
{
    for (auto& b : blocks_)
        b.active = active;
}

bool ParamVector::any_active() const
{
    for (const auto& b : blocks_)
        if (b.active)
            return true;
    return false;
}

void ParamVector::unpack_model(model::FaceModel& model) const
{
    for (std::size_t i : model_blocks_)
    {
        const ParamBlock& b = blocks_[i];
        const auto seg = segment(b);
        switch (b.kind)
        {
        case BlockKind::GeomBasis:
            model.geom_basis = Eigen::Map<const Eigen::MatrixXd>(seg.data(), geom_rows_, geom_cols_);
            break;
        case BlockKind::AppearBasis:
            model.appear_basis = Eigen::Map<const Eigen::MatrixXd>(seg.data(), appear_rows_, appear_cols_);
            break;
        default:
            model.appear_mean = seg;
            break;
        }
    }
}

void ParamVector::store_model(const model::FaceModel& model)
{
    for (std::size_t i : model_blocks_)
    {
        const ParamBlock& b = blocks_[i];
        auto seg = segment(b);
        switch (b.kind)
        {
        case BlockKind::GeomBasis:
            if (model.geom_basis.size() != b.size)
                throw std::invalid_argument("geom_basis size changed");
            seg = Eigen::Map<const Eigen::VectorXd>(model.geom_basis.data(), b.size);
            break;
        case BlockKind::AppearBasis:
            if (model.appear_basis.size() != b.size)
                throw std::invalid_argument("appear_basis size changed");
            seg = Eigen::Map<const Eigen::VectorXd>(model.appear_basis.data(), b.size);
            break;
        default:
            if (model.appear_mean.size() != b.size)
                throw std::invalid_argument("appear_mean size changed");
            seg = model.appear_mean;
            break;
        }
    }
}

model::SampleParams ParamVector::unpack_sample(int sample) const
{
    model::SampleParams out;
    for (std::size_t i : sample_blocks(sample))
    {
        const ParamBlock& b = blocks_[i];
        const auto seg = segment(b);
        if (b.frame >= static_cast<int>(out.frames.size()))
            out.frames.resize(static_cast<std::size_t>(b.frame) + 1);
        switch (b.kind)
        {
        case BlockKind::Alpha: out.identity.alpha = seg; break;
        case BlockKind::Beta: out.identity.beta = seg; break;
        case BlockKind::Rotation: out.frames[static_cast<std::size_t>(b.frame)].rotation = seg; break;
        case BlockKind::Translation: out.frames[static_cast<std::size_t>(b.frame)].translation = seg; break;
        case BlockKind::Gamma: out.frames[static_cast<std::size_t>(b.frame)].gamma = seg; break;
        case BlockKind::Delta: out.frames[static_cast<std::size_t>(b.frame)].delta = seg; break;
        default: break;
        }
    }
    return out;
}

void ParamVector::store_sample(int sample, const model::SampleParams& params)
{
    for (std::size_t i : sample_blocks(sample))
    {
        const ParamBlock& b = blocks_[i];
        if (b.frame >= static_cast<int>(params.frames.size()))
            throw std::invalid_argument("store_sample: frame count changed");
        const auto& f = b.frame >= 0 ? params.frames[static_cast<std::size_t>(b.frame)] : model::FrameParams{};
        const Eigen::VectorXd src = [&]() -> Eigen::VectorXd {
            switch (b.kind)
            {
            case BlockKind::Alpha: return params.identity.alpha;
            case BlockKind::Beta: return params.identity.beta;
            case BlockKind::Rotation: return f.rotation;
            case BlockKind::Translation: return f.translation;
            case BlockKind::Gamma: return f.gamma;
            default: return f.delta;
            }
        }();
        if (src.size() != b.size)
            throw std::invalid_argument("store_sample: size of block '" + b.name + "' changed");
        segment(b) = src;
    }
}

} // namespace autodiff
} // namespace facelearn
