/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/autodiff/param_vector.hpp
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

#include "facelearn/model/face_model.hpp"
#include "facelearn/model/params.hpp"

#include "Eigen/Core"

#include <optional>
#include <string>
#include <vector>

namespace facelearn {
namespace autodiff {

enum class BlockKind
{
    Alpha,
    Beta,
    Rotation,
    Translation,
    Gamma,
    Delta,
    GeomBasis,
    AppearBasis,
    AppearMean
};

std::string to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& name);
bool is_model_block(BlockKind kind);

struct ParamBlock
{
    std::string name; ///< "geom_basis", "s3/alpha", "s3/f1/rotation", ...
    BlockKind kind = BlockKind::Alpha;
    int sample = -1; ///< -1 for model blocks.
    int frame = -1;  ///< -1 for identity and model blocks.
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
    bool active = true;
};

/**
 * All optimisation variables in one flat vector with a registry of named,
 * disjoint blocks covering it. Model matrices are stored column-major.
 */
class ParamVector
{
public:
    Eigen::VectorXd values;

    /// Registers the model blocks (when `with_model`) followed by each sample's identity and frame blocks.
    static ParamVector pack(const model::FaceModel& model, const std::vector<model::SampleParams>& samples,
                            bool with_model = true);

    const std::vector<ParamBlock>& blocks() const { return blocks_; }
    const ParamBlock& block(const std::string& name) const;
    std::optional<std::size_t> find(const std::string& name) const;

    /// Block indices of one sample (identity first, then frames in order).
    const std::vector<std::size_t>& sample_blocks(int sample) const;
    /// Indices of the model blocks (empty without model).
    const std::vector<std::size_t>& model_blocks() const { return model_blocks_; }

    int num_samples() const { return static_cast<int>(sample_blocks_.size()); }
    bool has_model() const { return !model_blocks_.empty(); }

    void set_active(BlockKind kind, bool active);
    void set_active(const std::string& name, bool active);
    void set_all_active(bool active);
    bool any_active() const;

    Eigen::Ref<Eigen::VectorXd> segment(const ParamBlock& block) { return values.segment(block.offset, block.size); }
    Eigen::Ref<const Eigen::VectorXd> segment(const ParamBlock& block) const
    {
        return values.segment(block.offset, block.size);
    }

    /// Copies the model blocks into `model`; no-op without model blocks.
    void unpack_model(model::FaceModel& model) const;
    void store_model(const model::FaceModel& model);

    model::SampleParams unpack_sample(int sample) const;
    void store_sample(int sample, const model::SampleParams& params);

private:
    void add_block(std::string name, BlockKind kind, int sample, int frame, Eigen::Index size);

    std::vector<ParamBlock> blocks_;
    std::vector<std::size_t> model_blocks_;
    std::vector<std::vector<std::size_t>> sample_blocks_;
    Eigen::Index geom_rows_ = 0, geom_cols_ = 0, appear_rows_ = 0, appear_cols_ = 0;
};

} // namespace autodiff
} // namespace facelearn
