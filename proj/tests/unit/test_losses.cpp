/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: tests/unit/test_losses.cpp
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
#include "doctest.h"
#include "support.hpp"

#include "facelearn/data/synthetic.hpp"
#include "facelearn/loss/losses.hpp"
#include "facelearn/render/camera.hpp"

#include <cmath>

using namespace facelearn;

namespace {

model::FrameParams frontal(const model::FaceModel& m)
{
    const Eigen::Map<const Eigen::Matrix3Xd> v(m.mean_shape.data(), 3, m.num_vertices());
    model::FrameParams f;
    f.translation = Eigen::Vector3d(0, 0, 3.2) - v.rowwise().mean();
    f.gamma = model::ambient_light(1.0);
    f.delta = Eigen::VectorXd::Zero(m.expression_dim());
    return f;
}

data::Frame constant_frame(int size, const Eigen::Vector3d& color)
{
    data::Frame f;
    f.name = "f";
    f.image = Image(size, size, color);
    f.landmarks.confidences.setOnes();
    return f;
}

/// Sample whose landmarks sit exactly on the projected landmark vertices.
struct Posed
{
    model::FaceModel model;
    data::MultiFrameSample sample;
    model::SampleParams params;
};

Posed posed(int frames)
{
    Posed p{testing::small_model(2), {}, {}};
    p.params = model::zero_params(p.model.identity_dim(), p.model.appearance_dim(), p.model.expression_dim(), frames);
    p.sample.subject = "s";
    for (int f = 0; f < frames; ++f)
    {
        p.params.frames[static_cast<std::size_t>(f)] = frontal(p.model);
        p.params.frames[static_cast<std::size_t>(f)].rotation = Eigen::Vector3d(0.0, 0.1 * f, 0.0);
        data::Frame frame = constant_frame(64, Eigen::Vector3d(0.5, 0.5, 0.5));
        frame.name = "f" + std::to_string(f);
        p.sample.frames.push_back(frame);
    }
    const auto rendered = loss::render_sample(p.model, p.sample, p.params);
    for (int f = 0; f < frames; ++f)
        for (int i = 0; i < mesh::num_landmarks; ++i)
            p.sample.frames[static_cast<std::size_t>(f)].landmarks.positions.col(i) =
                rendered[static_cast<std::size_t>(f)].screen.col(
                    p.model.mesh.landmark_vertex_indices[static_cast<std::size_t>(i)]);
    return p;
}

} // namespace

TEST_CASE("photometric loss")
{
    SUBCASE("albedo offset of 0.1 under unit ambient light costs 0.03 per visible vertex")
    {
        const model::FaceModel m = testing::small_model(1);
        const Eigen::Vector3d base(0.5, 0.4, 0.3);
        Eigen::Matrix3Xd albedo = (base + Eigen::Vector3d::Constant(0.1)).replicate(1, m.num_vertices());
        const render::CameraIntrinsics c = render::CameraIntrinsics::for_image(64, 64);
        const render::RenderedFrame r = render::render_frame(
            m.mesh.faces, Eigen::Map<const Eigen::Matrix3Xd>(m.mean_shape.data(), 3, m.num_vertices()), albedo,
            frontal(m), c);
        data::MultiFrameSample s;
        s.frames.push_back(constant_frame(64, base));
        REQUIRE(!r.visible_indices.empty());
        CHECK(loss::photometric_loss(s, {r}) == doctest::Approx(0.03).epsilon(1e-12));
        CHECK(loss::photometric_loss(s, {r}, false) ==
              doctest::Approx(0.03 * static_cast<double>(r.visible_indices.size())).epsilon(1e-12));
    }
    SUBCASE("a frame that sees nothing contributes zero; no frame seeing anything is an error")
    {
        Posed p = posed(2);
        p.sample.frames[0].image = Image(64, 64, Eigen::Vector3d(0.2, 0.3, 0.9));
        auto rendered = loss::render_sample(p.model, p.sample, p.params);
        const loss::PhotometricSum first = loss::photometric_frame(p.sample.frames[0].image, rendered[0]);
        p.params.frames[1].translation.z() = -5.0;
        rendered = loss::render_sample(p.model, p.sample, p.params);
        REQUIRE(rendered[1].visible_indices.empty());
        CHECK(loss::photometric_loss(p.sample, rendered) == doctest::Approx(first.sum / first.count));
        p.params.frames[0].translation.z() = -5.0;
        rendered = loss::render_sample(p.model, p.sample, p.params);
        CHECK_THROWS_WITH(loss::photometric_loss(p.sample, rendered), doctest::Contains("model invisible"));
    }
}

TEST_CASE("landmark loss")
{
    Posed p = posed(1);
    const std::vector<int>& ids = p.model.mesh.landmark_vertex_indices;
    auto rendered = loss::render_sample(p.model, p.sample, p.params);
    CHECK(loss::landmark_loss(p.sample, rendered, ids) < 1e-24);

    p.sample.frames[0].landmarks.positions.col(10) += Eigen::Vector2d(3.0, 4.0);
    CHECK(loss::landmark_loss(p.sample, rendered, ids) == doctest::Approx(25.0 / 66.0).epsilon(1e-10));
    CHECK(loss::landmark_loss(p.sample, rendered, ids, false) == doctest::Approx(25.0).epsilon(1e-10));

    p.sample.frames[0].landmarks.confidences(10) = 0.5;
    CHECK(loss::landmark_loss(p.sample, rendered, ids) == doctest::Approx(12.5 / 66.0).epsilon(1e-10));

    p.sample.frames[0].landmarks.confidences.setZero();
    p.sample.frames[0].landmarks.positions.array() += 17.0;
    CHECK(loss::landmark_loss(p.sample, rendered, ids) == 0.0);
}

TEST_CASE("smoothness loss")
{
    model::FaceModel m = testing::small_model(5);
    std::mt19937_64 rng(3);
    m.geom_basis = model::ocl_project(testing::random_matrix(3 * m.num_nodes(), m.identity_dim(), rng, 0.05),
                                      m.graph_blendshapes);
    CHECK(loss::smoothness_loss(m, Eigen::VectorXd::Zero(m.identity_dim())) == 0.0);

    const Eigen::Vector3d shift(0.4, -0.2, 0.9);
    CHECK(loss::smoothness_from_displacement(m.graph.neighborhoods, shift.replicate(m.num_nodes(), 1)) == 0.0);

    const Eigen::VectorXd alpha = testing::random_vector(m.identity_dim(), rng);
    const Eigen::VectorXd t = model::ocl_project(m.geom_basis, m.graph_blendshapes) * alpha;
    double oracle = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i)
        for (int j = 0; j < m.num_nodes(); ++j)
        {
            const auto& n = m.graph.neighborhoods[static_cast<std::size_t>(i)];
            if (std::find(n.begin(), n.end(), j) != n.end())
                oracle += (t.segment<3>(3 * i) - t.segment<3>(3 * j)).squaredNorm();
        }
    CHECK(oracle > 0.0);
    CHECK(loss::smoothness_loss(m, alpha) == doctest::Approx(oracle).epsilon(1e-12));

    // Adding a constant field leaves the energy unchanged.
    CHECK(loss::smoothness_from_displacement(m.graph.neighborhoods, t + shift.replicate(m.num_nodes(), 1)) ==
          doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("chroma and sparsity weights")
{
    Eigen::Matrix3Xd colors(3, 3);
    colors << 0.2, 0.4, 0.9, 0.3, 0.6, 0.1, 0.5, 1.0, 0.2;
    const Eigen::Matrix3Xd h = loss::chroma(colors);
    CHECK((h.col(0) - colors.col(0) / (1.0 + 1e-4)).norm() < 1e-15);
    CHECK((h.col(0) - h.col(1)).norm() < 1e-4); // same hue, double intensity

    const std::vector<std::vector<int>> ring = {{1}, {0}};
    const loss::EdgeWeights same = loss::chroma_weights(ring, Eigen::Matrix3Xd::Constant(3, 2, 0.3), 80.0);
    CHECK(same[0][0] == 1.0);
    Eigen::Matrix3Xd apart = Eigen::Matrix3Xd::Zero(3, 2);
    apart(0, 1) = 0.1;
    const loss::EdgeWeights w = loss::chroma_weights(ring, apart, 80.0);
    CHECK(w[0][0] == doctest::Approx(std::exp(-8.0)).epsilon(1e-12));
    CHECK(w[0][0] == doctest::Approx(3.35e-4).epsilon(0.01));
    CHECK(w[1][0] == w[0][0]);

    const model::FaceModel m = testing::small_model(6);
    std::mt19937_64 rng(4);
    Eigen::Matrix3Xd random_h = testing::random_matrix(3, m.num_vertices(), rng).cwiseAbs();
    for (const auto& list : loss::chroma_weights(m.vertex_neighbors, random_h, 80.0))
        for (double x : list)
            CHECK((x > 0.0 && x <= 1.0));
}

TEST_CASE("sparsity loss")
{
    loss::SparsityConfig cfg;
    const model::FaceModel m = testing::small_model(7);
    const loss::EdgeWeights ones = loss::uniform_edge_weights(m.vertex_neighbors);

    // Constant albedo leaves only the smoothing floor eps_norm^p on every ordered edge.
    const Eigen::Matrix3Xd flat = Eigen::Vector3d(0.8, 0.6, 0.5).replicate(1, m.num_vertices());
    std::size_t edges = 0;
    for (const auto& ring : m.vertex_neighbors)
        edges += ring.size();
    const double floor = std::pow(cfg.eps_norm, cfg.p);
    CHECK(floor <= 1e-5);
    CHECK(loss::sparsity_loss(m.vertex_neighbors, flat, ones, cfg) ==
          doctest::Approx(static_cast<double>(edges) * floor).epsilon(1e-9));

    const std::vector<std::vector<int>> edge = {{1}, {}};
    Eigen::Matrix3Xd pair = Eigen::Matrix3Xd::Zero(3, 2);
    pair(1, 1) = 1.0;
    CHECK(loss::sparsity_loss(edge, pair, loss::uniform_edge_weights(edge), cfg) == doctest::Approx(1.0).epsilon(1e-9));

    std::mt19937_64 rng(5);
    const Eigen::Matrix3Xd r = testing::random_matrix(3, m.num_vertices(), rng, 0.2);
    loss::EdgeWeights w = ones;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& list : w)
        for (double& x : list)
            x = u(rng);
    double oracle = 0.0;
    for (int i = 0; i < m.num_vertices(); ++i)
        for (std::size_t k = 0; k < m.vertex_neighbors[static_cast<std::size_t>(i)].size(); ++k)
        {
            const int j = m.vertex_neighbors[static_cast<std::size_t>(i)][k];
            const double d2 = (r.col(i) - r.col(j)).squaredNorm();
            oracle += w[static_cast<std::size_t>(i)][k] * std::pow(d2 + cfg.eps_norm * cfg.eps_norm, cfg.p / 2.0);
        }
    CHECK(loss::sparsity_loss(m.vertex_neighbors, r, w, cfg) == doctest::Approx(oracle).epsilon(1e-12));

    loss::SparsityConfig bad;
    bad.p = 2.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("expression regularizer")
{
    const Eigen::VectorXd sigmas = Eigen::VectorXd::LinSpaced(8, 0.3, 1.0);
    model::FrameParams f;
    f.delta = Eigen::VectorXd::Zero(8);
    CHECK(loss::expression_reg({f}, sigmas) == 0.0);
    f.delta = sigmas;
    CHECK(loss::expression_reg({f}, sigmas) == doctest::Approx(8.0).epsilon(1e-14));
    f.delta = 0.37 * sigmas.cwiseProduct(Eigen::VectorXd::LinSpaced(8, -1.0, 2.0));
    const double once = loss::expression_reg({f}, sigmas);
    f.delta *= 2.0;
    CHECK(loss::expression_reg({f}, sigmas) == doctest::Approx(4.0 * once).epsilon(1e-14));
}

TEST_CASE("total loss bookkeeping")
{
    Posed p = posed(2);
    std::mt19937_64 rng(8);
    p.sample.frames[1].landmarks.positions.col(3) += Eigen::Vector2d(1.0, -2.0);
    p.params.identity.beta = testing::random_vector(p.model.appearance_dim(), rng, 5.0);
    p.params.frames[0].delta = testing::random_vector(p.model.expression_dim(), rng, 0.3);
    p.params.identity.alpha = testing::random_vector(p.model.identity_dim(), rng, 3.0);
    const loss::EdgeWeights ew = loss::uniform_edge_weights(p.model.vertex_neighbors);

    loss::LossWeights only_lan;
    only_lan.pho = only_lan.smo = only_lan.spa = only_lan.ble = 0.0;
    only_lan.lan = 1.0;
    const loss::LossBreakdown lb = loss::total_loss(p.model, p.sample, p.params, only_lan, ew);
    const auto rendered = loss::render_sample(p.model, p.sample, p.params);
    CHECK(lb.total == loss::landmark_loss(p.sample, rendered, p.model.mesh.landmark_vertex_indices));

    const loss::LossWeights w;
    const loss::LossBreakdown all = loss::total_loss(p.model, p.sample, p.params, w, ew);
    CHECK(all.total == loss::LossBreakdown::combine(all, w));
    CHECK(all.total == w.pho * all.pho + w.lan * all.lan + w.smo * all.smo + w.spa * all.spa + w.ble * all.ble);
    for (double t : {all.pho, all.lan, all.smo, all.spa, all.ble})
        CHECK(t > 0.0);

    // Deterministic.
    const loss::LossBreakdown again = loss::total_loss(p.model, p.sample, p.params, w, ew);
    CHECK(again.total == all.total);

    loss::LossBreakdown sum;
    sum += all;
    sum += all;
    CHECK(sum.total == 2.0 * all.total);
    CHECK(sum.spa == 2.0 * all.spa);
}

TEST_CASE("synthesis closure at the generating parameters")
{
    // Pooled over a small standard dataset: a few grazing vertices per frame keep single frames noisier.
    const data::FaceTemplate face = data::make_face_template(36);
    const model::FaceModel gt = data::make_ground_truth_model(face, data::make_toy_blendshapes(face));
    data::GeneratorConfig cfg;
    cfg.subjects = 10;
    const auto dataset = data::generate_synthetic(gt, cfg);

    double sum = 0.0;
    long count = 0;
    for (const data::MultiFrameSample& s : dataset)
    {
        REQUIRE(s.ground_truth.has_value());
        const auto rendered = loss::render_sample(gt, s, s.ground_truth->params);
        for (int f = 0; f < s.num_frames(); ++f)
        {
            const loss::PhotometricSum p =
                loss::photometric_frame(s.frames[static_cast<std::size_t>(f)].image, rendered[static_cast<std::size_t>(f)]);
            sum += p.sum;
            count += p.count;
        }
        CHECK(loss::landmark_loss(s, rendered, gt.mesh.landmark_vertex_indices) <= 1e-6);
    }
    CHECK(sum / static_cast<double>(count) <= 1e-4);
}

TEST_CASE("weight and dimension validation")
{
    loss::LossWeights w;
    CHECK_NOTHROW(w.validate());
    w.smo = -1.0;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
    w = {};
    w.pho = w.lan = 0.0;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);

    Posed p = posed(2);
    model::SampleParams wrong = p.params;
    wrong.frames.pop_back();
    CHECK_THROWS_AS(loss::check_dimensions(p.model, p.sample, wrong), std::invalid_argument);
    wrong = p.params;
    wrong.identity.alpha.resize(1);
    CHECK_THROWS_AS(loss::check_dimensions(p.model, p.sample, wrong), std::invalid_argument);
}
