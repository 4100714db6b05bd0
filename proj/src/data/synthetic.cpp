/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/data/synthetic.cpp
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
#include "facelearn/data/synthetic.hpp"

#include "facelearn/core/parallel.hpp"
#include "facelearn/mesh/deformation_graph.hpp"
#include "facelearn/render/camera.hpp"
#include "facelearn/render/renderer.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace facelearn {
namespace data {

namespace {

constexpr double semi_x = 0.75;
constexpr double semi_y = 1.0;
constexpr double semi_z = 0.8;
constexpr double cap = 0.95;

double gauss(double a, double b, double ca, double cb, double ra, double rb)
{
    const double x = (a - ca) / ra;
    const double y = (b - cb) / rb;
    return std::exp(-0.5 * (x * x + y * y));
}

double sigmoid(double x)
{
    return 1.0 / (1.0 + std::exp(-x));
}

double nose(double a, double b)
{
    return gauss(a, b, 0.0, 0.02, 0.15, 0.25);
}

double relief(double a, double b)
{
    return 0.05 * nose(a, b) + 0.02 * gauss(a, b, 0.0, -0.38, 0.5, 0.12) + 0.02 * gauss(a, b, 0.0, 0.75, 0.3, 0.15) +
           0.01 * gauss(a, b, 0.0, 0.45, 0.25, 0.1);
}

// Layout positions of the 66 landmarks: jaw 17, brows 10, nose 9, eyes 12, mouth 18.
std::vector<Eigen::Vector2d> landmark_layout()
{
    std::vector<Eigen::Vector2d> out;
    const double pi = std::numbers::pi;
    for (int k = 0; k < 17; ++k)
    {
        const double t = (170.0 - 10.0 * k) * pi / 180.0;
        out.emplace_back(0.88 * std::cos(t), 0.88 * std::sin(t));
    }
    for (int side = -1; side <= 1; side += 2)
        for (int k = 0; k < 5; ++k)
        {
            const double s = k / 4.0;
            const double a = side < 0 ? -0.62 + 0.45 * s : 0.17 + 0.45 * s;
            out.emplace_back(a, -0.42 - 0.06 * std::sin(pi * s));
        }
    for (int k = 0; k < 4; ++k)
        out.emplace_back(0.0, -0.25 + 0.1 * k);
    for (int k = 0; k < 5; ++k)
        out.emplace_back(-0.16 + 0.08 * k, 0.16);
    for (int side = -1; side <= 1; side += 2)
        for (int k = 0; k < 6; ++k)
        {
            const double t = pi - k * pi / 3.0;
            out.emplace_back(side * 0.35 + 0.14 * std::cos(t), -0.2 - 0.07 * std::sin(t));
        }
    for (int k = 0; k < 12; ++k)
    {
        const double t = pi - k * pi / 6.0;
        out.emplace_back(0.3 * std::cos(t), 0.45 - 0.13 * std::sin(t));
    }
    for (int k = 0; k < 6; ++k)
    {
        const double t = pi * (k < 3 ? 0.75 - 0.25 * k : -0.25 - 0.25 * (k - 3));
        out.emplace_back(0.18 * std::cos(t), 0.45 - 0.06 * std::sin(t));
    }
    return out;
}

Eigen::Vector3d lerp(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double t)
{
    return a + t * (b - a);
}

} // namespace

FaceTemplate make_face_template(int grid)
{
    if (grid < 8)
        throw std::invalid_argument("face template grid must be at least 8");
    std::vector<int> id(static_cast<std::size_t>(grid * grid), -1);
    std::vector<Eigen::Vector2d> uv;
    for (int r = 0; r < grid; ++r)
        for (int c = 0; c < grid; ++c)
        {
            const double a = -1.0 + 2.0 * (c + 0.5) / grid;
            const double b = -1.0 + 2.0 * (r + 0.5) / grid;
            if (a * a + b * b <= 1.0)
            {
                id[static_cast<std::size_t>(r * grid + c)] = static_cast<int>(uv.size());
                uv.emplace_back(a, b);
            }
        }

    FaceTemplate face;
    face.uv.resize(2, static_cast<Eigen::Index>(uv.size()));
    face.mesh.vertices.resize(3, static_cast<Eigen::Index>(uv.size()));
    for (std::size_t i = 0; i < uv.size(); ++i)
    {
        const double a = uv[i].x(), b = uv[i].y();
        const double rho2 = cap * cap * (a * a + b * b);
        const auto col = static_cast<Eigen::Index>(i);
        face.uv.col(col) = uv[i];
        face.mesh.vertices.col(col) =
            Eigen::Vector3d(semi_x * cap * a, semi_y * cap * b, -semi_z * std::sqrt(1.0 - rho2) - relief(a, b));
    }

    std::vector<Eigen::Vector3i> tris;
    for (int r = 0; r + 1 < grid; ++r)
        for (int c = 0; c + 1 < grid; ++c)
        {
            const int v00 = id[static_cast<std::size_t>(r * grid + c)];
            const int v01 = id[static_cast<std::size_t>(r * grid + c + 1)];
            const int v10 = id[static_cast<std::size_t>((r + 1) * grid + c)];
            const int v11 = id[static_cast<std::size_t>((r + 1) * grid + c + 1)];
            // Orientation makes (p1 - p0) x (p2 - p0) point toward -z, i.e. out of the face.
            if (v00 >= 0 && v10 >= 0 && v11 >= 0)
                tris.emplace_back(v00, v10, v11);
            if (v00 >= 0 && v11 >= 0 && v01 >= 0)
                tris.emplace_back(v00, v11, v01);
        }
    face.mesh.faces.resize(3, static_cast<Eigen::Index>(tris.size()));
    for (std::size_t f = 0; f < tris.size(); ++f)
        face.mesh.faces.col(static_cast<Eigen::Index>(f)) = tris[f];

    std::vector<char> used(uv.size(), 0);
    for (const Eigen::Vector2d& p : landmark_layout())
    {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < uv.size(); ++i)
        {
            const double d = (uv[i] - p).squaredNorm();
            if (!used[i] && d < best_d)
            {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        used[static_cast<std::size_t>(best)] = 1;
        face.mesh.landmark_vertex_indices.push_back(best);
    }
    face.mesh.validate();
    return face;
}

model::Blendshapes make_toy_blendshapes(const FaceTemplate& face, double expression_std)
{
    if (!(expression_std > 0.0))
        throw std::invalid_argument("expression std must be positive");
    const Eigen::Index n = face.uv.cols();
    model::Blendshapes out;
    out.basis = Eigen::MatrixXd::Zero(3 * n, 8);
    out.sigmas = Eigen::VectorXd::Constant(8, expression_std);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double a = face.uv(0, i), b = face.uv(1, i);
        const double jaw = sigmoid((b - 0.45) / 0.15) * std::exp(-0.5 * (a / 0.6) * (a / 0.6));
        const double corners = gauss(a, b, -0.3, 0.45, 0.15, 0.15) + gauss(a, b, 0.3, 0.45, 0.15, 0.15);
        const double brows = gauss(a, b, 0.0, -0.5, 0.8, 0.3);
        const double inner = gauss(a, b, -0.2, -0.4, 0.12, 0.12) - gauss(a, b, 0.2, -0.4, 0.12, 0.12);
        const double lips = gauss(a, b, 0.0, 0.45, 0.2, 0.12);
        const double cheeks = gauss(a, b, -0.45, 0.25, 0.2, 0.2) + gauss(a, b, 0.45, 0.25, 0.2, 0.2);
        const double lids = gauss(a, b, -0.35, -0.25, 0.12, 0.08) + gauss(a, b, 0.35, -0.25, 0.12, 0.08);
        const Eigen::Index r = 3 * i;
        out.basis(r + 1, 0) = 0.08 * jaw;
        out.basis(r + 2, 0) = 0.02 * jaw;
        out.basis(r + 0, 1) = 0.04 * corners * (a < 0 ? -1.0 : 1.0);
        out.basis(r + 1, 1) = -0.04 * corners;
        out.basis(r + 1, 2) = -0.05 * brows;
        out.basis(r + 0, 3) = 0.03 * inner;
        out.basis(r + 2, 3) = 0.01 * std::abs(inner);
        out.basis(r + 2, 4) = -0.05 * lips;
        out.basis(r + 0, 4) = -0.1 * a * lips;
        out.basis(r + 2, 5) = -0.04 * cheeks;
        out.basis(r + 1, 6) = 0.02 * lids;
        out.basis(r + 0, 7) = 0.06 * jaw;
    }
    return out;
}

model::FaceModel make_ground_truth_model(const FaceTemplate& face, const model::Blendshapes& blendshapes,
                                         const GroundTruthOptions& options)
{
    if (options.identity_modes < 1 || options.identity_modes > 8)
        throw std::invalid_argument("ground truth identity modes must be in [1, 8]");
    if (options.appearance_modes < 0 || options.appearance_modes > 4)
        throw std::invalid_argument("ground truth appearance modes must be in [0, 4]");
    model::InitOptions init;
    init.node_count = options.node_count;
    init.skinning_k = options.skinning_k;
    init.identity_dim = options.identity_modes;
    init.appearance_dim = options.appearance_modes;
    init.seed = options.seed;
    model::FaceModel m = model::init_model(face.mesh, blendshapes, init);

    const int ng = m.num_nodes();
    Eigen::MatrixXd modes = Eigen::MatrixXd::Zero(3 * ng, 8);
    for (int j = 0; j < ng; ++j)
    {
        const int v = m.graph.node_vertices[static_cast<std::size_t>(j)];
        const double a = face.uv(0, v), b = face.uv(1, v);
        const Eigen::Index r = 3 * j;
        modes(r + 0, 0) = 0.08 * a;
        modes(r + 1, 1) = 0.07 * b;
        modes(r + 2, 2) = -0.02 * nose(a, b);
        const double chin = gauss(a, b, 0.0, 0.8, 0.4, 0.25);
        modes(r + 2, 3) = -0.03 * chin;
        modes(r + 1, 3) = 0.03 * chin;
        modes(r + 2, 4) = -0.03 * (gauss(a, b, -0.45, 0.2, 0.3, 0.3) + gauss(a, b, 0.45, 0.2, 0.3, 0.3));
        modes(r + 2, 5) = 0.03 * gauss(a, b, 0.0, -0.7, 0.8, 0.4);
        modes(r + 0, 6) = 0.07 * a * sigmoid((b - 0.3) / 0.15);
        modes(r + 2, 7) = -0.025 * (1.0 - a * a - b * b);
    }
    m.geom_basis = model::ocl_project(options.identity_scale * modes.leftCols(options.identity_modes),
                                      m.graph_blendshapes);

    const int nv = m.num_vertices();
    const Eigen::Vector3d skin(0.78, 0.58, 0.47);
    m.appear_basis = Eigen::MatrixXd::Zero(3 * nv, options.appearance_modes);
    for (int i = 0; i < nv; ++i)
    {
        const double a = face.uv(0, i), b = face.uv(1, i);
        const double lips = gauss(a, b, 0.0, 0.45, 0.25, 0.11);
        const double brows = std::min(1.0, gauss(a, b, -0.37, -0.44, 0.2, 0.1) + gauss(a, b, 0.37, -0.44, 0.2, 0.1));
        const double eyes = std::min(1.0, gauss(a, b, -0.35, -0.2, 0.13, 0.08) + gauss(a, b, 0.35, -0.2, 0.13, 0.08));
        const double cheeks = gauss(a, b, -0.45, 0.2, 0.2, 0.2) + gauss(a, b, 0.45, 0.2, 0.2, 0.2);
        Eigen::Vector3d c = skin + cheeks * Eigen::Vector3d(0.06, -0.02, -0.02);
        c = lerp(c, Eigen::Vector3d(0.72, 0.36, 0.36), lips);
        c = lerp(c, Eigen::Vector3d(0.32, 0.23, 0.18), 0.7 * brows);
        c = lerp(c, Eigen::Vector3d(0.40, 0.30, 0.25), 0.5 * eyes);
        m.appear_mean.segment<3>(3 * i) = c;

        const double s = options.appearance_scale;
        const Eigen::Vector3d modes_rgb[4] = {
            s * 0.08 * (1.0 - 0.5 * brows) * Eigen::Vector3d(1.0, 0.85, 0.75),
            s * (0.5 + cheeks) * Eigen::Vector3d(0.05, -0.02, -0.02),
            s * lips * Eigen::Vector3d(0.06, -0.04, -0.02),
            s * -0.12 * brows * Eigen::Vector3d(1.0, 1.0, 1.0),
        };
        for (int k = 0; k < options.appearance_modes; ++k)
            m.appear_basis.block<3, 1>(3 * i, k) = modes_rgb[k];
    }
    m.validate();
    return m;
}

void GeneratorConfig::validate() const
{
    if (subjects < 1 || frames < 1 || width < 4 || height < 4)
        throw std::invalid_argument("generator: subjects, frames and image size must be positive");
    if (identity_std < 0 || appearance_std < 0 || expression_std < 0 || yaw_range_deg < 0 || pitch_std_deg < 0 ||
        roll_std_deg < 0 || translation_std < 0 || light_intensity_std < 0 || light_perturbation < 0)
        throw std::invalid_argument("generator: standard deviations and ranges must be nonnegative");
    if (!(depth > render::near_plane))
        throw std::invalid_argument("generator: depth must lie beyond the near plane");
    if (edge_padding < 0)
        throw std::invalid_argument("generator: edge padding must be nonnegative");
}

std::vector<double> sample_yaws(int frames, double range_rad, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const double width = 2.0 * range_rad;
    const double separation = width / frames;
    const double slack = width - (frames - 1) * separation;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> offsets(static_cast<std::size_t>(frames));
    for (double& o : offsets)
        o = slack * uniform(rng);
    std::sort(offsets.begin(), offsets.end());
    std::vector<double> yaws;
    for (int k = 0; k < frames; ++k)
        yaws.push_back(-range_rad + offsets[static_cast<std::size_t>(k)] + k * separation);
    std::shuffle(yaws.begin(), yaws.end(), rng);
    return yaws;
}

Frame synthesize_frame(const model::FaceModel& gt_model, const model::IdentityParams& identity,
                       const model::FrameParams& frame, const GeneratorConfig& config)
{
    const auto k = render::CameraIntrinsics::for_image(config.width, config.height);
    const auto rendered = render::render_vertices(gt_model, identity, frame, k);
    const Image background(config.width, config.height, Eigen::Vector3d::Constant(config.background));
    Frame out;
    out.image = quantize_8bit(render::rasterize_preview(rendered, gt_model.mesh.faces, background, config.edge_padding));
    const auto& lm = gt_model.mesh.landmark_vertex_indices;
    out.landmarks.positions.resize(2, static_cast<Eigen::Index>(lm.size()));
    out.landmarks.confidences.resize(static_cast<Eigen::Index>(lm.size()));
    for (std::size_t j = 0; j < lm.size(); ++j)
    {
        const auto col = static_cast<Eigen::Index>(j);
        const bool ok = rendered.in_front[static_cast<std::size_t>(lm[j])];
        out.landmarks.positions.col(col) = ok ? Eigen::Vector2d(rendered.screen.col(lm[j])) : Eigen::Vector2d::Zero();
        out.landmarks.confidences(col) = ok ? 1.0 : 0.0;
    }
    return out;
}

MultiFrameSample generate_subject(const model::FaceModel& gt_model, const GeneratorConfig& config, int subject)
{
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(subject)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double deg = std::numbers::pi / 180.0;

    GroundTruth gt;
    gt.model_name = config.model_name;
    auto& id = gt.params.identity;
    id.alpha.resize(gt_model.identity_dim());
    for (Eigen::Index i = 0; i < id.alpha.size(); ++i)
        id.alpha(i) = config.identity_std * normal(rng);
    id.beta.resize(gt_model.appearance_dim());
    for (Eigen::Index i = 0; i < id.beta.size(); ++i)
        id.beta(i) = config.appearance_std * normal(rng);

    const std::vector<double> yaws = sample_yaws(config.frames, config.yaw_range_deg * deg, rng());
    for (int f = 0; f < config.frames; ++f)
    {
        model::FrameParams fp;
        fp.delta.resize(gt_model.expression_dim());
        for (Eigen::Index u = 0; u < fp.delta.size(); ++u)
            fp.delta(u) = config.expression_std * gt_model.expression_sigmas(u) * normal(rng);
        const double pitch = config.pitch_std_deg * deg * normal(rng);
        const double roll = config.roll_std_deg * deg * normal(rng);
        const Eigen::Matrix3d r = (Eigen::AngleAxisd(yaws[static_cast<std::size_t>(f)], Eigen::Vector3d::UnitY()) *
                                   Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()) *
                                   Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()))
                                      .toRotationMatrix();
        const Eigen::AngleAxisd aa(r);
        fp.rotation = aa.angle() * aa.axis();
        fp.translation = Eigen::Vector3d(config.translation_std * normal(rng), config.translation_std * normal(rng),
                                         config.depth + config.translation_std * normal(rng));
        const double intensity = 1.0 + config.light_intensity_std * normal(rng);
        for (int c = 0; c < 3; ++c)
            fp.gamma(c) = intensity + 0.3 * config.light_intensity_std * normal(rng);
        for (int i = 3; i < model::num_sh_coefficients; ++i)
            fp.gamma(i) = config.light_perturbation * normal(rng);
        // Keep every visible shaded color inside (0, 1) so the 8-bit image neither clips nor floors.
        const auto k = render::CameraIntrinsics::for_image(config.width, config.height);
        for (int attempt = 0; attempt < 100; ++attempt)
        {
            const auto lit = render::render_vertices(gt_model, id, fp, k);
            double lo = 1.0, hi = 0.0;
            for (int i : lit.visible_indices)
            {
                lo = std::min(lo, lit.colors.col(i).minCoeff());
                hi = std::max(hi, lit.colors.col(i).maxCoeff());
            }
            if (lo >= 0.03 && hi <= 0.95)
                break;
            if (lo < 0.03)
                fp.gamma.tail(model::num_sh_coefficients - 3) *= 0.8;
            else
                fp.gamma *= 0.95 / hi;
        }
        gt.params.frames.push_back(fp);
    }

    MultiFrameSample sample;
    sample.subject = config.subject_prefix + std::to_string(subject);
    for (int f = 0; f < config.frames; ++f)
    {
        Frame frame = synthesize_frame(gt_model, id, gt.params.frames[static_cast<std::size_t>(f)], config);
        frame.name = "f" + std::to_string(f);
        sample.frames.push_back(std::move(frame));
    }
    sample.ground_truth = std::move(gt);
    return sample;
}

std::vector<MultiFrameSample> generate_synthetic(const model::FaceModel& gt_model, const GeneratorConfig& config,
                                                 int threads)
{
    config.validate();
    gt_model.validate();
    std::vector<MultiFrameSample> out(static_cast<std::size_t>(config.subjects));
    parallel_for(config.subjects, threads,
                 [&](int s) { out[static_cast<std::size_t>(s)] = generate_subject(gt_model, config, s); });
    return out;
}

ToyInstance make_toy_instance(std::uint64_t seed)
{
    const FaceTemplate face = make_face_template(25);
    const model::Blendshapes blendshapes = make_toy_blendshapes(face);
    GroundTruthOptions options;
    options.node_count = 60;
    options.seed = seed + 1000;

    ToyInstance toy;
    toy.model = make_ground_truth_model(face, blendshapes, options);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    for (Eigen::Index i = 0; i < toy.model.appear_mean.size(); ++i)
        toy.model.appear_mean(i) += noise(rng);

    GeneratorConfig config;
    config.subjects = 1;
    config.frames = 2;
    config.width = 96;
    config.height = 96;
    config.seed = seed;
    toy.sample = generate_subject(toy.model, config, 0);

    std::normal_distribution<double> normal(0.0, 1.0);
    const auto jitter = [&](Eigen::VectorXd& v, double scale) {
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v(i) += scale * normal(rng);
    };
    toy.params = toy.sample.ground_truth->params;
    jitter(toy.params.identity.alpha, 0.1);
    jitter(toy.params.identity.beta, 0.1);
    for (model::FrameParams& f : toy.params.frames)
    {
        Eigen::VectorXd r = f.rotation, t = f.translation;
        jitter(r, 0.01);
        jitter(t, 0.005);
        f.rotation = r;
        f.translation = t;
        jitter(f.gamma, 0.02);
        jitter(f.delta, 0.1);
    }
    return toy;
}

} // namespace data
} // namespace facelearn
