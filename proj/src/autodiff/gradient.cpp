/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/autodiff/gradient.cpp
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
#include "facelearn/autodiff/gradient.hpp"

#include "facelearn/autodiff/tape.hpp"
#include "facelearn/core/parallel.hpp"
#include "facelearn/render/camera.hpp"
#include "facelearn/render/shading.hpp"

#include "Eigen/Geometry"

#include <cmath>
#include <stdexcept>

namespace facelearn {
namespace autodiff {

namespace {

using Eigen::Index;

Eigen::Map<const Eigen::Matrix3Xd> as_columns(const Eigen::VectorXd& v)
{
    return {v.data(), 3, v.size() / 3};
}

} // namespace

loss::LossBreakdown evaluate_sample(const model::FaceModel& model, const data::MultiFrameSample& sample,
                                    const model::SampleParams& params, const loss::LossWeights& weights,
                                    const loss::EdgeWeights& edge_weights, const loss::SparsityConfig& sparsity,
                                    SampleGradient& gradient, bool model_gradients)
{
    const std::vector<render::RenderedFrame> rendered = loss::render_sample(model, sample, params);
    const loss::LossBreakdown breakdown =
        loss::loss_terms(model, sample, params, rendered, weights, edge_weights, sparsity);

    const int nv = model.num_vertices();
    const int ng = model.num_nodes();
    const std::size_t m = rendered.size();
    const Eigen::MatrixXd theta = model::ocl_project(model.geom_basis, model.graph_blendshapes);
    const Eigen::VectorXd& alpha = params.identity.alpha;
    const Eigen::VectorXd& beta = params.identity.beta;
    const Eigen::VectorXd t = theta * alpha;
    const Eigen::VectorXd albedo_flat = model::assemble_appearance(model, beta);
    const auto albedo = as_columns(albedo_flat);

    int visible_count = 0;
    for (const auto& r : rendered)
        visible_count += static_cast<int>(r.visible_indices.size());
    const double pho_scale = weights.normalize ? weights.pho / visible_count : weights.pho;
    const double lan_scale =
        weights.normalize
            ? weights.lan / (static_cast<double>(m) * static_cast<double>(model.mesh.landmark_vertex_indices.size()))
            : weights.lan;

    gradient.params.identity.alpha = Eigen::VectorXd::Zero(alpha.size());
    gradient.params.identity.beta = Eigen::VectorXd::Zero(beta.size());
    gradient.params.frames.assign(m, {});
    for (auto& f : gradient.params.frames)
        f.delta = Eigen::VectorXd::Zero(model.expression_dim());
    gradient.geom_basis.resize(0, 0);
    gradient.appear_basis.resize(0, 0);
    gradient.appear_mean.resize(0);

    Eigen::VectorXd g_graph = Eigen::VectorXd::Zero(3 * ng);
    Eigen::Matrix3Xd g_albedo = Eigen::Matrix3Xd::Zero(3, nv);
    std::vector<Eigen::Matrix3Xd> g_vertices(m, Eigen::Matrix3Xd::Zero(3, nv));
    std::vector<Eigen::Matrix3Xd> g_normals(m, Eigen::Matrix3Xd::Zero(3, nv));

    GradientTape tape;

    tape.record("identity_geometry", [&] {
        gradient.params.identity.alpha = theta.transpose() * g_graph;
        if (model_gradients)
        {
            const Eigen::MatrixXd& b = model.graph_blendshapes;
            const Eigen::VectorXd projected = g_graph - b * (b.transpose() * g_graph);
            gradient.geom_basis = projected * alpha.transpose();
        }
    });

    tape.record("appearance", [&] {
        const Eigen::Map<const Eigen::VectorXd> g(g_albedo.data(), 3 * nv);
        gradient.params.identity.beta = model.appear_basis.transpose() * g;
        if (model_gradients)
        {
            gradient.appear_basis = g * beta.transpose();
            gradient.appear_mean = g;
        }
    });

    for (std::size_t f = 0; f < m; ++f)
    {
        const render::RenderedFrame& r = rendered[f];
        const Image& image = sample.frames[f].image;
        const data::LandmarkSet& landmarks = sample.frames[f].landmarks;
        const model::FrameParams& frame = params.frames[f];
        model::FrameParams& g_frame = gradient.params.frames[f];

        tape.record("frame_geometry", [&, f] {
            const Eigen::Map<const Eigen::VectorXd> g(g_vertices[f].data(), 3 * nv);
            g_graph += model.skinning.apply_transpose(g);
            g_frame.delta += model.blendshapes.transpose() * g;
        });

        tape.record("normals", [&, f] {
            Eigen::Matrix3Xd g_sum(3, nv);
            for (int i = 0; i < nv; ++i)
            {
                const double length = r.normal_sums.col(i).norm();
                if (length > 1e-12)
                {
                    const Eigen::Vector3d n = r.normals.col(i);
                    const Eigen::Vector3d gn = g_normals[f].col(i);
                    g_sum.col(i) = (gn - n * n.dot(gn)) / length;
                }
                else
                    g_sum.col(i).setZero();
            }
            const Eigen::Matrix3Xi& faces = model.mesh.faces;
            for (Index k = 0; k < faces.cols(); ++k)
            {
                const int i0 = faces(0, k), i1 = faces(1, k), i2 = faces(2, k);
                const Eigen::Vector3d gc = g_sum.col(i0) + g_sum.col(i1) + g_sum.col(i2);
                const Eigen::Vector3d e1 = r.vertices.col(i1) - r.vertices.col(i0);
                const Eigen::Vector3d e2 = r.vertices.col(i2) - r.vertices.col(i0);
                const Eigen::Vector3d ge1 = e2.cross(gc);
                const Eigen::Vector3d ge2 = gc.cross(e1);
                g_vertices[f].col(i1) += ge1;
                g_vertices[f].col(i2) += ge2;
                g_vertices[f].col(i0) -= ge1 + ge2;
            }
        });

        tape.record("camera_shading", [&, f] {
            const render::CameraIntrinsics k = render::CameraIntrinsics::for_image(image.width(), image.height());
            const Eigen::Matrix3d rt = r.rotation.transpose();
            Eigen::Matrix3d g_rotation = Eigen::Matrix3d::Zero();
            Eigen::Vector3d g_translation = Eigen::Vector3d::Zero();
            Eigen::Matrix<double, 3, 9> g_light = Eigen::Matrix<double, 3, 9>::Zero();
            Eigen::Matrix<double, 3, 9> light;
            for (int b = 0; b < 9; ++b)
                light.col(b) = frame.gamma.segment<3>(3 * b);

            if (weights.pho != 0.0)
                for (int i : r.visible_indices)
                {
                    const render::ImageSample s = render::sample_image(image, r.screen.col(i));
                    const Eigen::Vector3d e = s.value - r.colors.col(i);
                    const Eigen::Vector3d g_color = -2.0 * pho_scale * e;
                    const Eigen::Vector2d g_screen = 2.0 * pho_scale * (s.gradient.transpose() * e);

                    g_albedo.col(i) += g_color.cwiseProduct(r.irradiance.col(i));
                    const Eigen::Vector3d g_irr = g_color.cwiseProduct(albedo.col(i));
                    g_light += g_irr * r.sh.col(i).transpose();
                    const Eigen::Matrix<double, 9, 1> g_sh = light.transpose() * g_irr;
                    const Eigen::Vector3d n_cam = r.camera_normals.col(i);
                    const Eigen::Vector3d g_ncam = render::sh_basis_jacobian(n_cam).transpose() * g_sh;
                    const Eigen::Vector3d p_cam = r.camera_vertices.col(i);
                    const Eigen::Vector3d g_pcam = render::projection_jacobian(p_cam, k).transpose() * g_screen;

                    g_vertices[f].col(i) += rt * g_pcam;
                    g_normals[f].col(i) += rt * g_ncam;
                    g_rotation += g_pcam * r.vertices.col(i).transpose() + g_ncam * r.normals.col(i).transpose();
                    g_translation += g_pcam;
                }

            if (weights.lan != 0.0)
                for (int j = 0; j < landmarks.size(); ++j)
                {
                    const int i = model.mesh.landmark_vertex_indices[static_cast<std::size_t>(j)];
                    if (!r.in_front[static_cast<std::size_t>(i)])
                        continue;
                    const Eigen::Vector2d g_screen =
                        -2.0 * lan_scale * landmarks.confidences(j) * (landmarks.positions.col(j) - r.screen.col(i));
                    const Eigen::Vector3d g_pcam =
                        render::projection_jacobian(r.camera_vertices.col(i), k).transpose() * g_screen;
                    g_vertices[f].col(i) += rt * g_pcam;
                    g_rotation += g_pcam * r.vertices.col(i).transpose();
                    g_translation += g_pcam;
                }

            const auto d_rotation = render::rotation_matrix_derivatives(frame.rotation);
            for (int a = 0; a < 3; ++a)
                g_frame.rotation(a) = g_rotation.cwiseProduct(d_rotation[static_cast<std::size_t>(a)]).sum();
            g_frame.translation = g_translation;
            for (int b = 0; b < 9; ++b)
                g_frame.gamma.segment<3>(3 * b) = g_light.col(b);
        });
    }

    tape.record("smoothness", [&] {
        if (weights.smo == 0.0)
            return;
        const auto& hood = model.graph.neighborhoods;
        for (std::size_t i = 0; i < hood.size(); ++i)
            for (int j : hood[i])
            {
                const Eigen::Vector3d d =
                    2.0 * weights.smo * (t.segment<3>(3 * static_cast<Index>(i)) - t.segment<3>(3 * j));
                g_graph.segment<3>(3 * static_cast<Index>(i)) += d;
                g_graph.segment<3>(3 * j) -= d;
            }
    });

    tape.record("sparsity", [&] {
        if (weights.spa == 0.0)
            return;
        const double eps2 = sparsity.eps_norm * sparsity.eps_norm;
        const auto& nb = model.vertex_neighbors;
        for (std::size_t i = 0; i < nb.size(); ++i)
            for (std::size_t q = 0; q < nb[i].size(); ++q)
            {
                const int j = nb[i][q];
                const Eigen::Vector3d d = albedo.col(static_cast<Index>(i)) - albedo.col(j);
                const double s = weights.spa * edge_weights[i][q] * sparsity.p *
                                 std::pow(d.squaredNorm() + eps2, 0.5 * sparsity.p - 1.0);
                g_albedo.col(static_cast<Index>(i)) += s * d;
                g_albedo.col(j) -= s * d;
            }
    });

    tape.record("expression", [&] {
        if (weights.ble == 0.0)
            return;
        const Eigen::ArrayXd inv_var = model.expression_sigmas.array().square().inverse();
        for (std::size_t f = 0; f < m; ++f)
            gradient.params.frames[f].delta += (2.0 * weights.ble * params.frames[f].delta.array() * inv_var).matrix();
    });

    tape.backward();
    return breakdown;
}

namespace {

const loss::EdgeWeights& edge_weights_for(const Problem& problem, int s, const loss::EdgeWeights& uniform)
{
    const auto us = static_cast<std::size_t>(s);
    if (us < problem.edge_weights.size() && !problem.edge_weights[us].empty())
        return problem.edge_weights[us];
    return uniform;
}

std::vector<int> resolve_batch(const Problem& problem, const ParamVector& params, const std::vector<int>& batch)
{
    if (params.num_samples() != static_cast<int>(problem.samples.size()))
        throw std::invalid_argument("parameter vector and problem disagree on the sample count");
    if (!batch.empty())
        return batch;
    std::vector<int> all(problem.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = static_cast<int>(i);
    return all;
}

void scatter(const ParamVector& params, const std::vector<std::size_t>& block_ids, const Eigen::VectorXd& src,
             Eigen::VectorXd& dst)
{
    for (std::size_t id : block_ids)
    {
        const ParamBlock& b = params.blocks()[id];
        if (b.active)
            dst.segment(b.offset, b.size) += src.segment(b.offset, b.size);
    }
}

} // namespace

Evaluation evaluate_with_gradient(const Problem& problem, const ParamVector& params, const std::vector<int>& batch)
{
    const std::vector<int> ids = resolve_batch(problem, params, batch);
    model::FaceModel local;
    const model::FaceModel* model = &problem.model;
    if (params.has_model())
    {
        local = problem.model;
        params.unpack_model(local);
        model = &local;
    }
    bool model_active = false;
    for (std::size_t id : params.model_blocks())
        model_active = model_active || params.blocks()[id].active;

    const loss::EdgeWeights uniform = loss::uniform_edge_weights(problem.model.vertex_neighbors);
    const int n = static_cast<int>(ids.size());
    std::vector<loss::LossBreakdown> losses(ids.size());
    std::vector<SampleGradient> grads(ids.size());
    parallel_for(n, problem.threads, [&](int k) {
        const int s = ids[static_cast<std::size_t>(k)];
        losses[static_cast<std::size_t>(k)] =
            evaluate_sample(*model, *problem.samples[static_cast<std::size_t>(s)], params.unpack_sample(s),
                            problem.weights, edge_weights_for(problem, s, uniform), problem.sparsity,
                            grads[static_cast<std::size_t>(k)], model_active);
    });

    Evaluation out;
    out.gradient = Eigen::VectorXd::Zero(params.values.size());
    ParamVector shaped = params;
    for (int k = 0; k < n; ++k)
    {
        const int s = ids[static_cast<std::size_t>(k)];
        const SampleGradient& g = grads[static_cast<std::size_t>(k)];
        out.loss += losses[static_cast<std::size_t>(k)];

        // Reuse the packing layout to flatten the typed gradient.
        shaped.store_sample(s, g.params);
        scatter(params, params.sample_blocks(s), shaped.values, out.gradient);
        if (model_active)
        {
            for (std::size_t id : params.model_blocks())
            {
                const ParamBlock& b = params.blocks()[id];
                if (!b.active)
                    continue;
                const double* src = b.kind == BlockKind::GeomBasis     ? g.geom_basis.data()
                                    : b.kind == BlockKind::AppearBasis ? g.appear_basis.data()
                                                                       : g.appear_mean.data();
                out.gradient.segment(b.offset, b.size) += Eigen::Map<const Eigen::VectorXd>(src, b.size);
            }
        }
    }
    if (!std::isfinite(out.loss.total))
    {
        for (const ParamBlock& b : params.blocks())
            if (!params.segment(b).allFinite())
                throw std::runtime_error("non-finite loss: block '" + b.name + "' holds non-finite values");
        throw std::runtime_error("non-finite loss");
    }
    for (const ParamBlock& b : params.blocks())
        if (b.active && !out.gradient.segment(b.offset, b.size).allFinite())
            throw std::runtime_error("non-finite gradient in block '" + b.name + "'");
    return out;
}

loss::LossBreakdown evaluate_loss(const Problem& problem, const ParamVector& params, const std::vector<int>& batch)
{
    const std::vector<int> ids = resolve_batch(problem, params, batch);
    model::FaceModel local;
    const model::FaceModel* model = &problem.model;
    if (params.has_model())
    {
        local = problem.model;
        params.unpack_model(local);
        model = &local;
    }
    const loss::EdgeWeights uniform = loss::uniform_edge_weights(problem.model.vertex_neighbors);
    std::vector<loss::LossBreakdown> losses(ids.size());
    parallel_for(static_cast<int>(ids.size()), problem.threads, [&](int k) {
        const int s = ids[static_cast<std::size_t>(k)];
        losses[static_cast<std::size_t>(k)] =
            loss::total_loss(*model, *problem.samples[static_cast<std::size_t>(s)], params.unpack_sample(s),
                             problem.weights, edge_weights_for(problem, s, uniform), problem.sparsity);
    });
    loss::LossBreakdown out;
    for (const loss::LossBreakdown& l : losses)
        out += l;
    return out;
}

std::vector<int> discrete_signature(const Problem& problem, const ParamVector& params)
{
    model::FaceModel local = problem.model;
    params.unpack_model(local);
    std::vector<int> sig;
    for (int s = 0; s < params.num_samples(); ++s)
    {
        const data::MultiFrameSample& sample = *problem.samples[static_cast<std::size_t>(s)];
        const auto rendered = loss::render_sample(local, sample, params.unpack_sample(s));
        for (std::size_t f = 0; f < rendered.size(); ++f)
        {
            const auto& r = rendered[f];
            sig.push_back(-1);
            for (int i : r.visible_indices)
            {
                const auto cell = render::sample_image(sample.frames[f].image, r.screen.col(i));
                sig.insert(sig.end(), {i, cell.cell_x, cell.cell_y});
            }
            sig.push_back(-2);
            for (int i : local.mesh.landmark_vertex_indices)
                sig.push_back(r.in_front[static_cast<std::size_t>(i)]);
        }
    }
    return sig;
}

FdReport finite_difference_check(const Problem& problem, const ParamVector& params, const std::string& block,
                                 double step, double tolerance, int max_coordinates)
{
    const ParamBlock& b = params.block(block);
    if (!b.active)
        throw std::invalid_argument("finite_difference_check: block '" + block + "' is frozen");
    const Evaluation base = evaluate_with_gradient(problem, params);
    const std::vector<int> base_signature = discrete_signature(problem, params);

    std::vector<Index> coords;
    if (max_coordinates > 0 && b.size > max_coordinates)
        for (Index k = 0; k < max_coordinates; ++k)
            coords.push_back(k * b.size / max_coordinates);
    else
        for (Index k = 0; k < b.size; ++k)
            coords.push_back(k);

    FdReport report;
    report.block = block;
    ParamVector probe = params;
    for (Index k : coords)
    {
        FdCoordinate c;
        c.index = k;
        c.analytic = base.gradient(b.offset + k);
        const double original = probe.values(b.offset + k);

        probe.values(b.offset + k) = original + step;
        const double plus = evaluate_loss(problem, probe).total;
        const bool same_plus = discrete_signature(problem, probe) == base_signature;
        probe.values(b.offset + k) = original - step;
        const double minus = evaluate_loss(problem, probe).total;
        const bool same_minus = discrete_signature(problem, probe) == base_signature;
        probe.values(b.offset + k) = original;

        c.numeric = (plus - minus) / (2.0 * step);
        c.skipped = !(same_plus && same_minus);
        c.rel_error = std::abs(c.analytic - c.numeric) /
                      std::max({std::abs(c.analytic), std::abs(c.numeric), 1e-8});
        if (c.skipped)
            ++report.num_skipped;
        else
            report.max_rel_error = std::max(report.max_rel_error, c.rel_error);
        report.coordinates.push_back(c);
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

} // namespace autodiff
} // namespace facelearn
