/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/optim/fit.cpp
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
#include "facelearn/optim/fit.hpp"

#include "facelearn/autodiff/gradient.hpp"
#include "facelearn/render/camera.hpp"
#include "facelearn/render/renderer.hpp"
#include "facelearn/render/shading.hpp"

#include <cmath>
#include <limits>

namespace facelearn {
namespace optim {

using autodiff::BlockKind;

namespace {

void wrap_rotations(autodiff::ParamVector& params)
{
    for (const autodiff::ParamBlock& b : params.blocks())
        if (b.kind == BlockKind::Rotation && b.active)
        {
            const Eigen::Vector3d r = params.segment(b);
            params.segment(b) = render::wrap_axis_angle(r);
        }
}

void activate(autodiff::ParamVector& params, const Phase& phase)
{
    params.set_all_active(false);
    for (BlockKind k : phase.active)
        if (!autodiff::is_model_block(k) || params.has_model())
            params.set_active(k, true);
}

} // namespace

model::FrameParams initial_frame(const model::FaceModel& model, const data::Frame& frame)
{
    const int w = frame.image.width();
    const int h = frame.image.height();
    const render::CameraIntrinsics intr = render::CameraIntrinsics::for_image(w, h);
    const Eigen::Map<const Eigen::Matrix3Xd> mean(model.mean_shape.data(), 3, model.num_vertices());
    const std::vector<int>& ids = model.mesh.landmark_vertex_indices;

    model::FrameParams out;
    out.delta = Eigen::VectorXd::Zero(model.expression_dim());

    Eigen::Vector3d model_min = Eigen::Vector3d::Constant(INFINITY), model_max = -model_min;
    Eigen::Vector2d det_min = Eigen::Vector2d::Constant(INFINITY), det_max = -det_min;
    Eigen::Vector3d model_sum = Eigen::Vector3d::Zero();
    Eigen::Vector2d det_sum = Eigen::Vector2d::Zero();
    int valid = 0;
    for (int i = 0; i < frame.landmarks.size() && i < static_cast<int>(ids.size()); ++i)
    {
        if (!(frame.landmarks.confidences(i) > 0.0))
            continue;
        const Eigen::Vector3d p = mean.col(ids[static_cast<std::size_t>(i)]);
        const Eigen::Vector2d s = frame.landmarks.positions.col(i);
        model_min = model_min.cwiseMin(p);
        model_max = model_max.cwiseMax(p);
        det_min = det_min.cwiseMin(s);
        det_max = det_max.cwiseMax(s);
        model_sum += p;
        det_sum += s;
        ++valid;
    }

    if (valid >= 2 && det_max.y() - det_min.y() > 1.0 && model_max.y() - model_min.y() > 0.0)
    {
        const double depth = intr.fy * (model_max.y() - model_min.y()) / (det_max.y() - det_min.y());
        const Eigen::Vector3d center = model_sum / valid;
        const Eigen::Vector2d target = det_sum / valid;
        out.translation = render::unproject(target, depth, intr) - center;
    }
    else
    {
        // No usable landmarks: let the mean face span half the image height, centered.
        Eigen::Vector3d lo = mean.rowwise().minCoeff(), hi = mean.rowwise().maxCoeff();
        const double depth = intr.fy * (hi.y() - lo.y()) / (0.5 * h);
        out.translation = Eigen::Vector3d(0.0, 0.0, depth) - 0.5 * (lo + hi);
    }

    out.gamma = model::ambient_light(1.0);
    model::IdentityParams identity{Eigen::VectorXd::Zero(model.identity_dim()),
                                   Eigen::VectorXd::Zero(model.appearance_dim())};
    const render::RenderedFrame r = render::render_vertices(model, identity, out, intr);
    double image_sum = 0.0, albedo_sum = 0.0;
    for (int i : r.visible_indices)
    {
        image_sum += render::sample_image(frame.image, r.screen.col(i)).value.sum();
        albedo_sum += model.appear_mean.segment<3>(3 * i).sum();
    }
    if (albedo_sum > 0.0 && image_sum > 0.0)
        out.gamma = model::ambient_light(image_sum / albedo_sum);
    return out;
}

model::SampleParams initial_params(const model::FaceModel& model, const data::MultiFrameSample& sample)
{
    model::SampleParams p;
    p.identity.alpha = Eigen::VectorXd::Zero(model.identity_dim());
    p.identity.beta = Eigen::VectorXd::Zero(model.appearance_dim());
    for (const data::Frame& f : sample.frames)
        p.frames.push_back(initial_frame(model, f));
    return p;
}

bool has_converged(const std::vector<double>& losses, int window, double tolerance)
{
    if (window < 1 || static_cast<int>(losses.size()) <= window)
        return false;
    const double before = losses[losses.size() - 1 - static_cast<std::size_t>(window)];
    const double now = losses.back();
    return before - now < tolerance * std::max(std::abs(before), 1e-300);
}

FitResult fit_sample(const model::FaceModel& model, const data::MultiFrameSample& sample, const FitOptions& options)
{
    if (sample.frames.empty())
        throw std::invalid_argument("fit_sample: sample '" + sample.subject + "' has no frames");
    options.schedule.validate();
    options.weights.validate();

    FitResult result;
    result.params = options.initial ? *options.initial : initial_params(model, sample);
    if (result.params.frames.size() != sample.frames.size())
        throw std::invalid_argument("fit_sample: initial parameters have " +
                                    std::to_string(result.params.frames.size()) + " frames, sample has " +
                                    std::to_string(sample.frames.size()));

    autodiff::Problem problem;
    problem.model = model;
    problem.samples = {&sample};
    problem.weights = options.weights;
    problem.sparsity = options.sparsity;
    autodiff::ParamVector pv = autodiff::ParamVector::pack(model, {result.params}, false);
    OptimizerState state = OptimizerState::for_params(pv, {});

    const auto diverged = [&](const std::string& why) {
        return DivergenceError("fit_sample: " + why + " at iteration " + std::to_string(result.iterations) +
                                   " (sample '" + sample.subject + "')",
                               result.trace);
    };

    for (const Phase& phase : options.schedule.phases)
    {
        activate(pv, phase);
        if (!pv.any_active())
            continue;
        state.learning_rates = phase.learning_rates;
        if (options.refresh_chroma && options.weights.spa > 0.0)
            problem.edge_weights = {loss::sample_chroma_weights(model, sample, pv.unpack_sample(0), options.sparsity)};

        // Adaptive steps oscillate near a minimum; the phase hands on its best iterate.
        std::vector<double> losses;
        Eigen::VectorXd best_values = pv.values;
        double best_loss = std::numeric_limits<double>::infinity();
        bool phase_converged = false;
        for (int it = 0; it < phase.iterations; ++it)
        {
            autodiff::Evaluation ev;
            try
            {
                ev = autodiff::evaluate_with_gradient(problem, pv);
            }
            catch (const std::runtime_error& e)
            {
                throw diverged(e.what());
            }
            result.trace.push_back(ev.loss);
            losses.push_back(ev.loss.total);
            if (!(ev.loss.total <= options.divergence))
                throw diverged("loss " + std::to_string(ev.loss.total) + " exceeds the divergence bound");
            if (ev.loss.total < best_loss)
            {
                best_loss = ev.loss.total;
                best_values = pv.values;
            }
            if (has_converged(losses, options.window, options.tolerance))
            {
                phase_converged = true;
                break;
            }
            adaptive_step(state, pv, ev.gradient);
            wrap_rotations(pv);
            ++result.iterations;
        }
        if (phase_converged || !(autodiff::evaluate_loss(problem, pv).total < best_loss))
            pv.values = best_values;
        result.converged = phase_converged;
    }

    result.params = pv.unpack_sample(0);
    const loss::LossBreakdown final_loss = autodiff::evaluate_loss(problem, pv);
    result.trace.push_back(final_loss);
    if (!(final_loss.total <= options.divergence))
        throw diverged("final loss " + std::to_string(final_loss.total) + " exceeds the divergence bound");
    return result;
}

} // namespace optim
} // namespace facelearn
