/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/optim/fit.hpp
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

#include "facelearn/data/sample.hpp"
#include "facelearn/loss/losses.hpp"
#include "facelearn/model/face_model.hpp"
#include "facelearn/optim/schedule.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace facelearn {
namespace optim {

/// Thrown when the loss exceeds the divergence bound or becomes non-finite. Carries the trace so far.
class DivergenceError : public std::runtime_error
{
public:
    DivergenceError(const std::string& what, std::vector<loss::LossBreakdown> trace)
        : std::runtime_error(what), trace_(std::move(trace))
    {
    }
    const std::vector<loss::LossBreakdown>& trace() const { return trace_; }

private:
    std::vector<loss::LossBreakdown> trace_;
};

/**
 * Starting point for one frame: identity rotation; translation placing the mean face so that its
 * landmark bounding box matches the detected one (height sets the depth, the box center sets x/y);
 * band-0 white light matching the mean image intensity under the mean albedo at the visible vertices.
 * Landmarks with zero confidence are ignored.
 */
model::FrameParams initial_frame(const model::FaceModel& model, const data::Frame& frame);

/// alpha = beta = delta = 0 and initial_frame for every frame.
model::SampleParams initial_params(const model::FaceModel& model, const data::MultiFrameSample& sample);

struct FitOptions
{
    loss::LossWeights weights;
    loss::SparsityConfig sparsity;
    Schedule schedule = Schedule::default_fitting();
    double tolerance = 1e-6;    ///< Relative improvement over `window` iterations that ends a phase.
    int window = 20;
    double divergence = 1e6;
    bool refresh_chroma = true; ///< Recompute sparsity edge weights at each phase start (else uniform).
    std::optional<model::SampleParams> initial; ///< Replaces initial_params when set.
};

struct FitResult
{
    model::SampleParams params;
    std::vector<loss::LossBreakdown> trace; ///< Loss before every step, then the final loss.
    int iterations = 0;
    bool converged = false; ///< The last phase ended on the tolerance rule rather than its budget.
};

/**
 * Fits identity and per-frame parameters of one sample (any number of frames >= 1) against a frozen
 * model, phase by phase. Blocks of model kinds in the schedule are ignored. Each phase ends on the
 * lowest-loss iterate it visited, so a phase never hands on a point worse than its start.
 *
 * Throws std::invalid_argument for an empty sample or mismatched initial parameters and
 * DivergenceError when the loss leaves the divergence bound.
 */
FitResult fit_sample(const model::FaceModel& model, const data::MultiFrameSample& sample,
                     const FitOptions& options = {});

/// True once `trace` shows a relative improvement below `tolerance` over the last `window` entries.
bool has_converged(const std::vector<double>& losses, int window, double tolerance);

} // namespace optim
} // namespace facelearn
