/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/optim/optimizer.hpp
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

#include "facelearn/autodiff/param_vector.hpp"

#include "Eigen/Core"

#include <map>
#include <vector>

namespace facelearn {
namespace optim {

using LearningRates = std::map<autodiff::BlockKind, double>;

/**
 * Adaptive-moment optimizer state aligned to a ParamVector. Each block keeps its own step count so
 * blocks that are only updated when their sample is in the batch get correct bias correction.
 */
struct OptimizerState
{
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    std::vector<long> block_steps;
    long step = 0;
    LearningRates learning_rates;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState for_params(const autodiff::ParamVector& params, LearningRates rates);

    /// Learning rate of a block kind; throws when the table has no entry.
    double rate(autodiff::BlockKind kind) const;
};

/**
 * One bias-corrected adaptive-moment update of every active block, optionally restricted to the
 * blocks listed in `blocks`. Inactive blocks are left untouched.
 *
 * Throws std::invalid_argument for a shape mismatch or a non-finite gradient entry in an updated block.
 */
void adaptive_step(OptimizerState& state, autodiff::ParamVector& params, const Eigen::VectorXd& gradient,
                   const std::vector<std::size_t>* blocks = nullptr);

} // namespace optim
} // namespace facelearn
