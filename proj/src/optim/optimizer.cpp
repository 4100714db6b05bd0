/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/optim/optimizer.cpp
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
#include "facelearn/optim/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace facelearn {
namespace optim {

OptimizerState OptimizerState::for_params(const autodiff::ParamVector& params, LearningRates rates)
{
    OptimizerState state;
    state.first_moment = Eigen::VectorXd::Zero(params.values.size());
    state.second_moment = Eigen::VectorXd::Zero(params.values.size());
    state.block_steps.assign(params.blocks().size(), 0);
    state.learning_rates = std::move(rates);
    return state;
}

double OptimizerState::rate(autodiff::BlockKind kind) const
{
    const auto it = learning_rates.find(kind);
    if (it == learning_rates.end())
        throw std::invalid_argument("no learning rate for block kind '" + autodiff::to_string(kind) + "'");
    return it->second;
}

void adaptive_step(OptimizerState& state, autodiff::ParamVector& params, const Eigen::VectorXd& gradient,
                   const std::vector<std::size_t>* blocks)
{
    if (gradient.size() != params.values.size() || state.first_moment.size() != params.values.size() ||
        state.block_steps.size() != params.blocks().size())
        throw std::invalid_argument("adaptive_step: optimizer state, gradient and parameters differ in shape");

    std::vector<std::size_t> all;
    if (!blocks)
    {
        all.resize(params.blocks().size());
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = i;
        blocks = &all;
    }
    for (std::size_t id : *blocks)
    {
        const autodiff::ParamBlock& b = params.blocks().at(id);
        if (!b.active)
            continue;
        if (!gradient.segment(b.offset, b.size).allFinite())
            throw std::invalid_argument("adaptive_step: non-finite gradient in block '" + b.name + "'");
    }

    ++state.step;
    for (std::size_t id : *blocks)
    {
        const autodiff::ParamBlock& b = params.blocks()[id];
        if (!b.active)
            continue;
        const double lr = state.rate(b.kind);
        const long t = ++state.block_steps[id];
        const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
        auto m = state.first_moment.segment(b.offset, b.size);
        auto v = state.second_moment.segment(b.offset, b.size);
        const auto g = gradient.segment(b.offset, b.size);
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        params.segment(b).array() -=
            lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
    }
}

} // namespace optim
} // namespace facelearn
