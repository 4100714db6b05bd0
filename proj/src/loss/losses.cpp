/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/loss/losses.cpp
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
#include "facelearn/loss/losses.hpp"

#include "facelearn/render/shading.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace facelearn {
namespace loss {

void LossWeights::validate() const
{
    if (pho < 0.0 || lan < 0.0 || smo < 0.0 || spa < 0.0 || ble < 0.0)
        throw std::invalid_argument("loss weights must be nonnegative");
    if (pho <= 0.0 && lan <= 0.0)
        throw std::invalid_argument("at least one of the photometric and landmark weights must be positive");
}

void SparsityConfig::validate() const
{
    if (!(eta > 0.0))
        throw std::invalid_argument("sparsity eta must be positive");
    if (!(p > 0.0 && p <= 2.0))
        throw std::invalid_argument("sparsity exponent must lie in (0, 2]");
    if (eps_chroma < 0.0 || eps_norm < 0.0)
        throw std::invalid_argument("sparsity epsilons must be nonnegative");
}

double LossBreakdown::combine(const LossBreakdown& t, const LossWeights& w)
{
    return w.pho * t.pho + w.lan * t.lan + w.smo * t.smo + w.spa * t.spa + w.ble * t.ble;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o)
{
    pho += o.pho;
    lan += o.lan;
    smo += o.smo;
    spa += o.spa;
    ble += o.ble;
    total += o.total;
    return *this;
}

PhotometricSum photometric_frame(const Image& image, const render::RenderedFrame& rendered)
{
    PhotometricSum out;
    for (int i : rendered.visible_indices)
    {
        const auto s = render::sample_image(image, rendered.screen.col(i));
        out.sum += (s.value - rendered.colors.col(i)).squaredNorm();
    }
    out.count = static_cast<int>(rendered.visible_indices.size());
    return out;
}

double photometric_loss(const data::MultiFrameSample& sample, const std::vector<render::RenderedFrame>& rendered,
                        bool normalize)
{
    if (rendered.size() != sample.frames.size())
        throw std::invalid_argument("photometric_loss: one rendered frame per sample frame required");
    double sum = 0.0;
    int count = 0;
    for (std::size_t f = 0; f < rendered.size(); ++f)
    {
        const PhotometricSum p = photometric_frame(sample.frames[f].image, rendered[f]);
        sum += p.sum;
        count += p.count;
    }
    if (count == 0)
        throw std::runtime_error("model invisible");
    return normalize ? sum / count : sum;
}

double landmark_frame(const data::LandmarkSet& landmarks, const render::RenderedFrame& rendered,
                      const std::vector<int>& landmark_vertices)
{
    if (static_cast<int>(landmark_vertices.size()) != landmarks.size())
        throw std::invalid_argument("landmark_frame: landmark count differs from the mesh's landmark vertices");
    double sum = 0.0;
    for (int k = 0; k < landmarks.size(); ++k)
    {
        const int v = landmark_vertices[static_cast<std::size_t>(k)];
        // A landmark vertex behind the near plane has no projection and adds nothing.
        if (!rendered.in_front[static_cast<std::size_t>(v)])
            continue;
        sum += landmarks.confidences(k) * (landmarks.positions.col(k) - rendered.screen.col(v)).squaredNorm();
    }
    return sum;
}

double landmark_loss(const data::MultiFrameSample& sample, const std::vector<render::RenderedFrame>& rendered,
                     const std::vector<int>& landmark_vertices, bool normalize)
{
    if (rendered.size() != sample.frames.size())
        throw std::invalid_argument("landmark_loss: one rendered frame per sample frame required");
    double sum = 0.0;
    for (std::size_t f = 0; f < rendered.size(); ++f)
        sum += landmark_frame(sample.frames[f].landmarks, rendered[f], landmark_vertices);
    if (!normalize || rendered.empty())
        return sum;
    return sum / (static_cast<double>(rendered.size()) * static_cast<double>(landmark_vertices.size()));
}

double smoothness_from_displacement(const std::vector<std::vector<int>>& neighborhoods, const Eigen::VectorXd& t)
{
    if (t.size() != 3 * static_cast<Eigen::Index>(neighborhoods.size()))
        throw std::invalid_argument("smoothness: displacement size does not match the node count");
    double sum = 0.0;
    for (std::size_t i = 0; i < neighborhoods.size(); ++i)
        for (int j : neighborhoods[i])
            sum += (t.segment<3>(3 * static_cast<Eigen::Index>(i)) - t.segment<3>(3 * j)).squaredNorm();
    return sum;
}

double smoothness_loss(const model::FaceModel& model, const Eigen::VectorXd& alpha)
{
    return smoothness_from_displacement(model.graph.neighborhoods, model::graph_displacement(model, alpha));
}

Eigen::Matrix3Xd chroma(const Eigen::Matrix3Xd& colors, double eps_chroma)
{
    Eigen::Matrix3Xd out(3, colors.cols());
    for (Eigen::Index i = 0; i < colors.cols(); ++i)
        out.col(i) = colors.col(i) / (colors.col(i).sum() + eps_chroma);
    return out;
}

EdgeWeights chroma_weights(const std::vector<std::vector<int>>& neighbors, const Eigen::Matrix3Xd& chroma_values,
                           double eta)
{
    if (static_cast<Eigen::Index>(neighbors.size()) != chroma_values.cols())
        throw std::invalid_argument("chroma_weights: chroma count does not match the vertex count");
    EdgeWeights out(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i)
    {
        out[i].reserve(neighbors[i].size());
        for (int j : neighbors[i])
            out[i].push_back(std::exp(-eta * (chroma_values.col(static_cast<Eigen::Index>(i)) - chroma_values.col(j)).norm()));
    }
    return out;
}

EdgeWeights uniform_edge_weights(const std::vector<std::vector<int>>& neighbors)
{
    EdgeWeights out(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i)
        out[i].assign(neighbors[i].size(), 1.0);
    return out;
}

EdgeWeights sample_chroma_weights(const model::FaceModel& model, const data::MultiFrameSample& sample,
                                  const model::SampleParams& params, const SparsityConfig& config)
{
    const auto rendered = render_sample(model, sample, params);
    Eigen::Matrix3Xd mean = Eigen::Matrix3Xd::Zero(3, model.num_vertices());
    for (const auto& r : rendered)
        mean += chroma(r.colors, config.eps_chroma);
    mean /= static_cast<double>(rendered.size());
    return chroma_weights(model.vertex_neighbors, mean, config.eta);
}

double sparsity_loss(const std::vector<std::vector<int>>& neighbors, const Eigen::Matrix3Xd& albedo,
                     const EdgeWeights& weights, const SparsityConfig& config)
{
    if (static_cast<Eigen::Index>(neighbors.size()) != albedo.cols() || weights.size() != neighbors.size())
        throw std::invalid_argument("sparsity_loss: neighbor, albedo and weight counts differ");
    const double eps2 = config.eps_norm * config.eps_norm;
    const double half_p = 0.5 * config.p;
    double sum = 0.0;
    for (std::size_t i = 0; i < neighbors.size(); ++i)
    {
        if (weights[i].size() != neighbors[i].size())
            throw std::invalid_argument("sparsity_loss: weights do not match the neighbor layout");
        for (std::size_t k = 0; k < neighbors[i].size(); ++k)
        {
            const double d2 = (albedo.col(static_cast<Eigen::Index>(i)) - albedo.col(neighbors[i][k])).squaredNorm();
            sum += weights[i][k] * std::pow(d2 + eps2, half_p);
        }
    }
    return sum;
}

double expression_reg(const std::vector<model::FrameParams>& frames, const Eigen::VectorXd& sigmas)
{
    double sum = 0.0;
    for (const auto& f : frames)
    {
        if (f.delta.size() != sigmas.size())
            throw std::invalid_argument("expression_reg: delta size does not match the blendshape count");
        sum += f.delta.cwiseQuotient(sigmas).squaredNorm();
    }
    return sum;
}

void check_dimensions(const model::FaceModel& model, const data::MultiFrameSample& sample,
                      const model::SampleParams& params)
{
    if (sample.frames.empty())
        throw std::invalid_argument("sample '" + sample.subject + "' has no frames");
    if (params.frames.size() != sample.frames.size())
        throw std::invalid_argument("parameter frame count " + std::to_string(params.frames.size()) +
                                    " does not match sample frame count " + std::to_string(sample.frames.size()));
    if (params.identity.alpha.size() != model.identity_dim())
        throw std::invalid_argument("alpha has " + std::to_string(params.identity.alpha.size()) +
                                    " entries, model expects " + std::to_string(model.identity_dim()));
    if (params.identity.beta.size() != model.appearance_dim())
        throw std::invalid_argument("beta has " + std::to_string(params.identity.beta.size()) +
                                    " entries, model expects " + std::to_string(model.appearance_dim()));
    for (const auto& f : params.frames)
    {
        if (f.delta.size() != model.expression_dim())
            throw std::invalid_argument("delta has " + std::to_string(f.delta.size()) + " entries, model expects " +
                                        std::to_string(model.expression_dim()));
        if (f.gamma.size() != model::num_sh_coefficients)
            throw std::invalid_argument("illumination needs 27 coefficients");
    }
    if (static_cast<int>(model.mesh.landmark_vertex_indices.size()) != sample.frames.front().landmarks.size())
        throw std::invalid_argument("model defines " + std::to_string(model.mesh.landmark_vertex_indices.size()) +
                                    " landmark vertices, sample has " +
                                    std::to_string(sample.frames.front().landmarks.size()));
}

std::vector<render::RenderedFrame> render_sample(const model::FaceModel& model, const data::MultiFrameSample& sample,
                                                 const model::SampleParams& params)
{
    check_dimensions(model, sample, params);
    std::vector<render::RenderedFrame> out;
    out.reserve(sample.frames.size());
    for (std::size_t f = 0; f < sample.frames.size(); ++f)
    {
        const Image& image = sample.frames[f].image;
        out.push_back(render::render_vertices(model, params.identity, params.frames[f],
                                              render::CameraIntrinsics::for_image(image.width(), image.height())));
    }
    return out;
}

LossBreakdown loss_terms(const model::FaceModel& model, const data::MultiFrameSample& sample,
                         const model::SampleParams& params, const std::vector<render::RenderedFrame>& rendered,
                         const LossWeights& weights, const EdgeWeights& edge_weights, const SparsityConfig& sparsity)
{
    LossBreakdown out;
    out.pho = photometric_loss(sample, rendered, weights.normalize);
    out.lan = landmark_loss(sample, rendered, model.mesh.landmark_vertex_indices, weights.normalize);
    out.smo = smoothness_loss(model, params.identity.alpha);
    const Eigen::VectorXd albedo = model::assemble_appearance(model, params.identity.beta);
    out.spa = sparsity_loss(model.vertex_neighbors, Eigen::Map<const Eigen::Matrix3Xd>(albedo.data(), 3, model.num_vertices()),
                            edge_weights, sparsity);
    out.ble = expression_reg(params.frames, model.expression_sigmas);
    out.total = LossBreakdown::combine(out, weights);
    return out;
}

LossBreakdown total_loss(const model::FaceModel& model, const data::MultiFrameSample& sample,
                         const model::SampleParams& params, const LossWeights& weights,
                         const EdgeWeights& edge_weights, const SparsityConfig& sparsity)
{
    return loss_terms(model, sample, params, render_sample(model, sample, params), weights, edge_weights, sparsity);
}

} // namespace loss
} // namespace facelearn
