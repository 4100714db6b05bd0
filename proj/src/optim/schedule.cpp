/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/optim/schedule.cpp
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
#include "facelearn/optim/schedule.hpp"

#include <stdexcept>

namespace facelearn {
namespace optim {

using autodiff::BlockKind;

namespace {

const BlockKind all_kinds[] = {BlockKind::Alpha,     BlockKind::Beta,        BlockKind::Rotation,
                               BlockKind::Translation, BlockKind::Gamma,     BlockKind::Delta,
                               BlockKind::GeomBasis, BlockKind::AppearBasis, BlockKind::AppearMean};

const BlockKind sample_kinds[] = {BlockKind::Alpha, BlockKind::Beta,  BlockKind::Rotation,
                                  BlockKind::Translation, BlockKind::Gamma, BlockKind::Delta};

LearningRates base_rates()
{
    LearningRates rates;
    for (BlockKind k : all_kinds)
        rates[k] = autodiff::is_model_block(k) ? 1e-3 : 1e-2;
    return rates;
}

} // namespace

void Schedule::validate() const
{
    if (phases.empty())
        throw std::invalid_argument("schedule has no phases");
    for (const Phase& p : phases)
    {
        if (p.active.empty())
            throw std::invalid_argument("schedule phase '" + p.name + "' has no active block");
        if (p.iterations < 0)
            throw std::invalid_argument("schedule phase '" + p.name + "' has negative iterations");
        if (p.batch_size < 1)
            throw std::invalid_argument("schedule phase '" + p.name + "' has batch size below 1");
        for (BlockKind k : p.active)
        {
            const auto it = p.learning_rates.find(k);
            if (it == p.learning_rates.end() || !(it->second > 0.0))
                throw std::invalid_argument("schedule phase '" + p.name + "' has no positive learning rate for '" +
                                            autodiff::to_string(k) + "'");
        }
    }
}

Schedule Schedule::default_training(int warmup_iterations, int joint_iterations, int finetune_iterations,
                                    int batch_size)
{
    Schedule s;
    Phase warmup{"warmup", {}, base_rates(), warmup_iterations, batch_size};
    for (BlockKind k : sample_kinds)
        warmup.active.insert(k);
    Phase joint{"joint", {}, base_rates(), joint_iterations, batch_size};
    for (BlockKind k : all_kinds)
        joint.active.insert(k);
    Phase finetune = joint;
    finetune.name = "finetune";
    finetune.iterations = finetune_iterations;
    finetune.learning_rates[BlockKind::AppearBasis] *= 10.0;
    finetune.learning_rates[BlockKind::AppearMean] *= 10.0;
    s.phases = {warmup, joint, finetune};
    return s;
}

Schedule Schedule::default_fitting(int align_iterations, int full_iterations)
{
    Schedule s;
    Phase align{"align", {BlockKind::Rotation, BlockKind::Translation}, base_rates(), align_iterations, 1};
    Phase full{"full", {}, base_rates(), full_iterations, 1};
    for (BlockKind k : sample_kinds)
        full.active.insert(k);
    s.phases = {align, full};
    return s;
}

void Schedule::apply_config(const KeyValueConfig& config, const std::string& prefix)
{
    for (Phase& p : phases)
    {
        const std::string base = prefix + p.name + ".";
        p.iterations = config.get(base + "iterations", p.iterations);
        p.batch_size = config.get(base + "batch_size", p.batch_size);
        for (BlockKind k : all_kinds)
        {
            const std::string key = base + "lr." + autodiff::to_string(k);
            if (config.has(key))
                p.learning_rates[k] = config.get(key, 0.0);
        }
    }
    validate();
}

} // namespace optim
} // namespace facelearn
