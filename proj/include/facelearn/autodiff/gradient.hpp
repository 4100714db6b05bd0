/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/autodiff/gradient.hpp
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
#include "facelearn/data/sample.hpp"
#include "facelearn/loss/losses.hpp"
#include "facelearn/model/face_model.hpp"

#include "Eigen/Core"

#include <string>
#include <vector>

namespace facelearn {
namespace autodiff {

/// Gradient of one sample's weighted loss, shaped like the parameters.
struct SampleGradient
{
    model::SampleParams params;
    Eigen::MatrixXd geom_basis;   ///< Empty unless model gradients were requested.
    Eigen::MatrixXd appear_basis;
    Eigen::VectorXd appear_mean;
};

/**
 * Weighted loss of one sample and its exact gradient, treating the visible
 * sets and the sparsity weights as constants. The loss equals total_loss
 * bit for bit.
 */
loss::LossBreakdown evaluate_sample(const model::FaceModel& model, const data::MultiFrameSample& sample,
                                    const model::SampleParams& params, const loss::LossWeights& weights,
                                    const loss::EdgeWeights& edge_weights, const loss::SparsityConfig& sparsity,
                                    SampleGradient& gradient, bool model_gradients = true);

/// A loss over several samples sharing one model.
struct Problem
{
    model::FaceModel model; ///< Topology and fixed parts; learnable matrices come from the ParamVector when present.
    std::vector<const data::MultiFrameSample*> samples;
    loss::LossWeights weights;
    loss::SparsityConfig sparsity;
    std::vector<loss::EdgeWeights> edge_weights; ///< One per sample; empty entries mean uniform weights.
    int threads = 1; ///< Samples evaluated concurrently; the reduction order is fixed.
};

struct Evaluation
{
    loss::LossBreakdown loss;
    Eigen::VectorXd gradient; ///< Aligned with ParamVector::values; frozen blocks are exactly zero.
};

/**
 * Sum over `batch` (all samples when empty) of the per-sample losses, with the
 * flat gradient. Throws std::runtime_error naming the first block whose
 * gradient is not finite, or "non-finite loss".
 */
Evaluation evaluate_with_gradient(const Problem& problem, const ParamVector& params,
                                  const std::vector<int>& batch = {});

/// Loss only, same value as evaluate_with_gradient.
loss::LossBreakdown evaluate_loss(const Problem& problem, const ParamVector& params,
                                  const std::vector<int>& batch = {});

/// Visible sets, landmark projectability and bilinear cells of every frame, flattened.
std::vector<int> discrete_signature(const Problem& problem, const ParamVector& params);

struct FdCoordinate
{
    Eigen::Index index = 0; ///< Offset within the block.
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
    bool skipped = false; ///< Perturbation changed visibility or a bilinear cell.
};

struct FdReport
{
    std::string block;
    std::vector<FdCoordinate> coordinates;
    double max_rel_error = 0.0;
    int num_skipped = 0;
    bool passed = true;
};

/**
 * Central differences on every coordinate of one active block (at most
 * `max_coordinates`, evenly spread, when positive). Relative error uses the
 * denominator max(|a|, |b|, 1e-8).
 */
FdReport finite_difference_check(const Problem& problem, const ParamVector& params, const std::string& block,
                                 double step = 1e-5, double tolerance = 1e-4, int max_coordinates = 0);

} // namespace autodiff
} // namespace facelearn
