/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/optim/schedule.hpp
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

#include "facelearn/core/config.hpp"
#include "facelearn/optim/optimizer.hpp"

#include <set>
#include <string>
#include <vector>

namespace facelearn {
namespace optim {

struct Phase
{
    std::string name;
    std::set<autodiff::BlockKind> active;
    LearningRates learning_rates;
    int iterations = 0;
    int batch_size = 1; ///< Samples per step; ignored when fitting a single sample.
};

struct Schedule
{
    std::vector<Phase> phases;

    /// At least one phase; each has an active block, iterations >= 0, batch >= 1 and a positive rate per active kind.
    void validate() const;

    /**
     * Warm-up (per-sample blocks only), joint (all blocks) and appearance fine-tune (all blocks,
     * appearance model blocks at ten times the model rate). Per-sample rate 1e-2, model rate 1e-3.
     */
    static Schedule default_training(int warmup_iterations = 300, int joint_iterations = 1500,
                                     int finetune_iterations = 300, int batch_size = 8);

    /// Pose alignment (rotation, translation) followed by all per-sample blocks, rate 1e-2.
    static Schedule default_fitting(int align_iterations = 100, int full_iterations = 600);

    /**
     * Overrides phase fields from keys "<prefix><phase name>.iterations", ".batch_size" and
     * ".lr.<block kind>", e.g. "schedule.joint.lr.geom_basis".
     */
    void apply_config(const KeyValueConfig& config, const std::string& prefix);
};

} // namespace optim
} // namespace facelearn
