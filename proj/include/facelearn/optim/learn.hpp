/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/optim/learn.hpp
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

#include "facelearn/data/io.hpp"
#include "facelearn/loss/losses.hpp"
#include "facelearn/model/face_model.hpp"
#include "facelearn/optim/schedule.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace facelearn {
namespace optim {

struct LogRow
{
    std::string phase;
    int step = 0; ///< Global step count across phases.
    int batch_size = 0;
    loss::LossBreakdown loss; ///< Summed over the batch, before the update.
};

struct LearnOptions
{
    loss::LossWeights weights;
    loss::SparsityConfig sparsity;
    Schedule schedule = Schedule::default_training();
    std::uint64_t seed = 0;
    std::filesystem::path checkpoint_dir; ///< Empty: no checkpoints.
    std::filesystem::path log_path;       ///< Empty: no CSV log.
    double divergence = 1e6;              ///< Mean per-sample batch loss above this aborts.
    std::optional<std::vector<model::SampleParams>> initial_params; ///< Default: initial_params per sample.
    /**
     * Checkpoint stem ("<dir>/<k>-<name>") to continue from. Its model, parameter store and
     * optimizer state (moments, step counts, batch sampler state) replace the fresh ones, and
     * training continues with the phase after it, so the result equals an uninterrupted run.
     */
    std::filesystem::path resume_from;
    int threads = 1;     ///< Batch samples evaluated concurrently; results do not depend on it.
};

struct LearnResult
{
    model::FaceModel model;
    std::vector<model::SampleParams> params;
    std::vector<LogRow> log;
    loss::LossBreakdown final_loss; ///< Summed over the whole dataset after training.
};

/**
 * Jointly optimizes the shared model blocks and every sample's parameters with mini-batches.
 *
 * Each step draws the next batch of an epoch-wise shuffle (seeded), sums the loss over the batch
 * and updates the active blocks of the batch samples and the model. After every update the
 * geometry basis is re-projected onto the orthogonal complement of the graph blendshapes and
 * rotations are wrapped. Sparsity edge weights are recomputed from the current parameters at the
 * start of every epoch. At the end of each phase, "<k>-<name>.model.arc", "<k>-<name>.params.arc"
 * and "<k>-<name>.optim.arc" are written to the checkpoint directory.
 *
 * A non-finite or diverging step writes "abort.model.arc" / "abort.params.arc" (when checkpointing)
 * and throws std::runtime_error. Per-sample results are reduced in batch order, so equal inputs and
 * seed give bitwise equal results for any thread count.
 */
LearnResult learn_model(const data::Dataset& dataset, const model::FaceModel& initial_model,
                        const LearnOptions& options = {});

void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path);

} // namespace optim
} // namespace facelearn
