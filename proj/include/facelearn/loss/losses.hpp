/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/loss/losses.hpp
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
#include "facelearn/model/face_model.hpp"
#include "facelearn/model/params.hpp"
#include "facelearn/render/renderer.hpp"

#include "Eigen/Core"

#include <vector>

namespace facelearn {
namespace loss {

struct LossWeights
{
    double pho = 1.0;
    double lan = 0.5;
    double smo = 1e-3;
    double spa = 1e-5;
    double ble = 1e-3;
    /// Divide L_pho by the visible vertex count and L_lan by M * 66; false gives the raw sums.
    bool normalize = true;

    /// All weights nonnegative, at least one data term enabled.
    void validate() const;
};

struct SparsityConfig
{
    double eta = 80.0;
    double p = 0.9;
    double eps_chroma = 1e-4;
    double eps_norm = 1e-6;

    void validate() const;
};

struct LossBreakdown
{
    double pho = 0.0;
    double lan = 0.0;
    double smo = 0.0;
    double spa = 0.0;
    double ble = 0.0;
    double total = 0.0;

    /// Weighted sum of the five terms, in the fixed order used everywhere.
    static double combine(const LossBreakdown& terms, const LossWeights& weights);

    /// Termwise sum (batch accumulation); total is summed as well.
    LossBreakdown& operator+=(const LossBreakdown& other);
};

/// One weight per ordered 1-ring pair, laid out like FaceModel::vertex_neighbors.
using EdgeWeights = std::vector<std::vector<double>>;

/// Sum of squared residuals over the visible vertices of one frame, plus their count.
struct PhotometricSum
{
    double sum = 0.0;
    int count = 0;
};

PhotometricSum photometric_frame(const Image& image, const render::RenderedFrame& rendered);

/**
 * Sum over frames and visible vertices of ||F(u_i) - c_i||^2, divided by the
 * total visible count when `normalize` is set. Frames with nothing visible add
 * zero; throws std::runtime_error("model invisible") if no frame sees anything.
 */
double photometric_loss(const data::MultiFrameSample& sample, const std::vector<render::RenderedFrame>& rendered,
                        bool normalize = true);

/// Confidence-weighted landmark reprojection error of one frame (raw sum).
double landmark_frame(const data::LandmarkSet& landmarks, const render::RenderedFrame& rendered,
                      const std::vector<int>& landmark_vertices);

/// Sum of landmark_frame over frames, divided by M * 66 when `normalize` is set.
double landmark_loss(const data::MultiFrameSample& sample, const std::vector<render::RenderedFrame>& rendered,
                     const std::vector<int>& landmark_vertices, bool normalize = true);

/// Membrane energy sum_i sum_{j in N_i} ||t_i - t_j||^2 of stacked node displacements t (3|G|).
double smoothness_from_displacement(const std::vector<std::vector<int>>& neighborhoods, const Eigen::VectorXd& t);

/// smoothness_from_displacement of OCL(geom_basis) * alpha.
double smoothness_loss(const model::FaceModel& model, const Eigen::VectorXd& alpha);

/// Intensity-normalised color c / (c_r + c_g + c_b + eps) of every column.
Eigen::Matrix3Xd chroma(const Eigen::Matrix3Xd& colors, double eps_chroma = 1e-4);

/// exp(-eta ||h_i - h_j||) for every ordered neighbor pair.
EdgeWeights chroma_weights(const std::vector<std::vector<int>>& neighbors, const Eigen::Matrix3Xd& chroma_values,
                           double eta);

/// All-ones weights with the layout of `neighbors`.
EdgeWeights uniform_edge_weights(const std::vector<std::vector<int>>& neighbors);

/**
 * Sparsity weights of one sample from its current parameters: the chroma of
 * the shaded colors averaged over the sample's frames.
 */
EdgeWeights sample_chroma_weights(const model::FaceModel& model, const data::MultiFrameSample& sample,
                                  const model::SampleParams& params, const SparsityConfig& config);

/// sum_i sum_{j in N_i} w_ij (||r_i - r_j||^2 + eps_norm^2)^(p/2).
double sparsity_loss(const std::vector<std::vector<int>>& neighbors, const Eigen::Matrix3Xd& albedo,
                     const EdgeWeights& weights, const SparsityConfig& config);

/// sum_f sum_u (delta_u / sigma_u)^2.
double expression_reg(const std::vector<model::FrameParams>& frames, const Eigen::VectorXd& sigmas);

/// Renders every frame of the sample with the shared identity.
std::vector<render::RenderedFrame> render_sample(const model::FaceModel& model, const data::MultiFrameSample& sample,
                                                 const model::SampleParams& params);

/// All five terms and the weighted total for one sample.
LossBreakdown total_loss(const model::FaceModel& model, const data::MultiFrameSample& sample,
                         const model::SampleParams& params, const LossWeights& weights,
                         const EdgeWeights& edge_weights, const SparsityConfig& sparsity = {});

/// Term values from already rendered frames; total_loss is render_sample followed by this.
LossBreakdown loss_terms(const model::FaceModel& model, const data::MultiFrameSample& sample,
                         const model::SampleParams& params, const std::vector<render::RenderedFrame>& rendered,
                         const LossWeights& weights, const EdgeWeights& edge_weights, const SparsityConfig& sparsity);

/// Throws std::invalid_argument unless params match the model and the sample's frame count.
void check_dimensions(const model::FaceModel& model, const data::MultiFrameSample& sample,
                      const model::SampleParams& params);

} // namespace loss
} // namespace facelearn
