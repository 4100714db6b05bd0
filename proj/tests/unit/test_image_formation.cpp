/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: tests/unit/test_image_formation.cpp
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

#include "facelearn/render/camera.hpp"
#include "facelearn/render/renderer.hpp"
#include "facelearn/render/shading.hpp"

#include "Eigen/Dense"

#include <cmath>

using namespace facelearn;

namespace {

constexpr double pi = 3.14159265358979323846;

render::CameraIntrinsics camera(double f, double cx, double cy, int w, int h)
{
    render::CameraIntrinsics c;
    c.fx = c.fy = f;
    c.cx = cx;
    c.cy = cy;
    c.width = w;
    c.height = h;
    return c;
}

/// Independent Rodrigues oracle via the matrix exponential series.
Eigen::Matrix3d exp_series(const Eigen::Vector3d& w)
{
    Eigen::Matrix3d k;
    k << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    Eigen::Matrix3d term = Eigen::Matrix3d::Identity(), sum = Eigen::Matrix3d::Identity();
    for (int n = 1; n < 40; ++n)
    {
        term = term * k / n;
        sum += term;
    }
    return sum;
}

Image random_image(int w, int h, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.set_pixel(x, y, Eigen::Vector3d(u(rng), u(rng), u(rng)));
    return img;
}

model::FrameParams frontal(const model::FaceModel& m, double depth = 3.2)
{
    const Eigen::Map<const Eigen::Matrix3Xd> v(m.mean_shape.data(), 3, m.num_vertices());
    model::FrameParams f;
    f.translation = Eigen::Vector3d(0, 0, depth) - v.rowwise().mean();
    f.gamma = model::ambient_light(1.0);
    f.delta = Eigen::VectorXd::Zero(m.expression_dim());
    return f;
}

} // namespace

TEST_CASE("rigid transform")
{
    const Eigen::Vector3d v(0.3, -1.2, 2.0);
    CHECK(render::rigid_transform(v, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()) == v);
    CHECK(render::rotation_matrix(Eigen::Vector3d::Zero()) == Eigen::Matrix3d::Identity());

    const Eigen::Vector3d q = render::rigid_transform({1, 0, 0}, {0, 0, pi / 2}, Eigen::Vector3d::Zero());
    CHECK((q - Eigen::Vector3d(0, 1, 0)).norm() <= 1e-12);

    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i)
    {
        const Eigen::Vector3d w = testing::random_vector(3, rng, 1.0);
        const Eigen::Matrix3d r = render::rotation_matrix(w);
        CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(r.determinant() - 1.0) <= 1e-12);
        CHECK((r - exp_series(w)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("rotation derivatives match finite differences, including near zero")
{
    std::mt19937_64 rng(4);
    for (double scale : {1.0, 1e-9, 0.0})
    {
        const Eigen::Vector3d w = testing::random_vector(3, rng, 1.0) * scale;
        const auto d = render::rotation_matrix_derivatives(w);
        for (int k = 0; k < 3; ++k)
        {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e(k) = 1e-6;
            const Eigen::Matrix3d fd = (exp_series(w + e) - exp_series(w - e)) / 2e-6;
            CHECK((d[static_cast<std::size_t>(k)] - fd).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("axis-angle wrapping keeps the rotation")
{
    const Eigen::Vector3d w(0.0, 0.0, 1.5 * pi);
    const Eigen::Vector3d wrapped = render::wrap_axis_angle(w);
    CHECK(wrapped.norm() <= pi + 1e-12);
    CHECK((render::rotation_matrix(wrapped) - render::rotation_matrix(w)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::Vector3d small(0.1, 0.2, -0.3);
    CHECK(render::wrap_axis_angle(small) == small);
}

TEST_CASE("perspective projection")
{
    const render::CameraIntrinsics c = camera(100.0, 50.0, 40.0, 100, 80);
    CHECK(*render::project({0, 0, 1}, c) == Eigen::Vector2d(50.0, 40.0));
    CHECK(render::project({1, 0, 1}, c)->x() == 150.0);
    CHECK_FALSE(render::project({0, 0, -1}, c).has_value());
    CHECK_FALSE(render::project({0, 0, 0.005}, c).has_value());

    std::mt19937_64 rng(6);
    for (int i = 0; i < 20; ++i)
    {
        Eigen::Vector3d p = testing::random_vector(3, rng);
        p.z() = 1.0 + std::abs(p.z());
        const Eigen::Vector2d u1 = *render::project(p, c);
        const Eigen::Vector2d u2 = *render::project(Eigen::Vector3d(p.x(), p.y(), 2 * p.z()), c);
        const Eigen::Vector2d pp(c.cx, c.cy);
        CHECK(((u2 - pp) - 0.5 * (u1 - pp)).norm() < 1e-12);
        CHECK((render::unproject(u1, p.z(), c) - p).norm() <= 1e-10);

        const Eigen::Matrix<double, 2, 3> j = render::projection_jacobian(p, c);
        for (int k = 0; k < 3; ++k)
        {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e(k) = 1e-5;
            const Eigen::Vector2d fd = (*render::project(p + e, c) - *render::project(p - e, c)) / 2e-5;
            CHECK((j.col(k) - fd).norm() / std::max(1e-8, fd.norm()) < 1e-4);
        }
    }

    const render::CameraIntrinsics d = render::CameraIntrinsics::for_image(128, 96);
    CHECK(d.fx == doctest::Approx(153.6));
    CHECK(d.fy == d.fx);
    CHECK(d.cx == 64.0);
    CHECK(d.cy == 48.0);
}

TEST_CASE("spherical harmonics basis")
{
    const render::ShBasis z = render::sh_basis({0, 0, 1});
    render::ShBasis ez;
    ez << 1, 0, 1, 0, 0, 0, 2, 0, 0;
    CHECK(z == ez);
    const render::ShBasis x = render::sh_basis({1, 0, 0});
    render::ShBasis ex;
    ex << 1, 0, 0, 1, 0, 0, -1, 0, 1;
    CHECK(x == ex);
    CHECK_THROWS_AS(render::sh_basis({0, 0, 2}), std::invalid_argument);

    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i)
    {
        const Eigen::Vector3d n = testing::random_vector(3, rng).normalized();
        const render::ShBasis h = render::sh_basis(n);
        CHECK(h(0) == 1.0);
        // Jacobian against central differences of the polynomial (normalization off the sphere is irrelevant).
        const Eigen::Matrix<double, 9, 3> j = render::sh_basis_jacobian(n);
        const auto poly = [](const Eigen::Vector3d& v) {
            render::ShBasis out;
            out << 1, v.y(), v.z(), v.x(), v.x() * v.y(), v.y() * v.z(), 3 * v.z() * v.z() - 1, v.x() * v.z(),
                v.x() * v.x() - v.y() * v.y();
            return out;
        };
        for (int k = 0; k < 3; ++k)
        {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e(k) = 1e-5;
            const render::ShBasis fd = (poly(n + e) - poly(n - e)) / 2e-5;
            CHECK((j.col(k) - fd).norm() < 1e-8);
        }
    }
}

TEST_CASE("Lambertian shading")
{
    std::mt19937_64 rng(10);
    const Eigen::Vector3d n = testing::random_vector(3, rng).normalized();
    const Eigen::Vector3d r(0.7, 0.4, 0.2);

    CHECK(render::shade(r, n, model::ambient_light(1.0)) == r);
    const Eigen::VectorXd g = testing::random_vector(27, rng);
    CHECK(render::shade(Eigen::Vector3d::Zero(), n, g) == Eigen::Vector3d::Zero());

    // Explicit 9-term summation per channel.
    const render::ShBasis h = render::sh_basis(n);
    Eigen::Vector3d oracle = Eigen::Vector3d::Zero();
    for (int c = 0; c < 3; ++c)
    {
        double e = 0.0;
        for (int b = 0; b < 9; ++b)
            e += g(3 * b + c) * h(b);
        oracle(c) = r(c) * e;
    }
    CHECK((render::shade(r, n, g) - oracle).norm() < 1e-14);

    // Linear in gamma and in r.
    const Eigen::VectorXd g2 = testing::random_vector(27, rng);
    CHECK((render::shade(r, n, 2.0 * g - 0.5 * g2) - (2.0 * render::shade(r, n, g) - 0.5 * render::shade(r, n, g2)))
              .norm() < 1e-12);
    const Eigen::Vector3d r2(0.1, 0.9, 0.3);
    CHECK((render::shade(r + 3.0 * r2, n, g) - (render::shade(r, n, g) + 3.0 * render::shade(r2, n, g))).norm() <
          1e-12);

    // Not clamped.
    CHECK(render::shade(r, n, model::ambient_light(5.0)).maxCoeff() > 1.0);
}

TEST_CASE("visibility by back-face culling")
{
    mesh::Mesh sphere = testing::icosphere(3);
    const Eigen::Matrix3Xd normals = mesh::compute_vertex_normals(sphere.faces, sphere.vertices);
    const render::CameraIntrinsics c = render::CameraIntrinsics::for_image(64, 64);
    const Eigen::Vector3d center(0, 0, 5);
    const Eigen::Matrix3Xd cam = sphere.vertices.colwise() + center;

    const std::vector<int> vis = render::visible_set(cam, normals, c);
    std::vector<char> flag(static_cast<std::size_t>(sphere.num_vertices()), 0);
    for (int i : vis)
        flag[static_cast<std::size_t>(i)] = 1;
    int front = 0;
    for (int i = 0; i < sphere.num_vertices(); ++i)
    {
        const bool faces_camera = normals.col(i).dot(cam.col(i)) < 0.0;
        CHECK(static_cast<bool>(flag[static_cast<std::size_t>(i)]) == faces_camera);
        front += faces_camera;
        if (faces_camera)
            CHECK(sphere.vertices(2, i) < 0.0); // front hemisphere faces -z
    }
    CHECK(front > sphere.num_vertices() / 3);
    CHECK(front < sphere.num_vertices() / 2);

    // Behind the camera and all-away normals.
    const Eigen::Matrix3Xd behind = sphere.vertices.colwise() - center;
    CHECK(render::visible_set(behind, normals, c).empty());
    const Eigen::Matrix3Xd away = Eigen::Vector3d(0, 0, 1).replicate(1, sphere.num_vertices());
    CHECK(render::visible_set(cam, away, c).empty());
}

TEST_CASE("bilinear image sampling")
{
    std::mt19937_64 rng(12);
    const Image img = random_image(8, 6, rng);

    const render::ImageSample at = render::sample_image(img, {3.5, 2.5});
    CHECK((at.value - img.pixel(3, 2)).norm() == 0.0);
    const render::ImageSample mid = render::sample_image(img, {4.0, 2.5});
    CHECK((mid.value - 0.5 * (img.pixel(3, 2) + img.pixel(4, 2))).norm() < 1e-15);

    std::uniform_real_distribution<double> ux(0.5, 7.5), uy(0.5, 5.5);
    for (int i = 0; i < 100; ++i)
    {
        const Eigen::Vector2d u(ux(rng), uy(rng));
        const double fx = u.x() - 0.5, fy = u.y() - 0.5;
        const int x0 = std::min(static_cast<int>(std::floor(fx)), 6), y0 = std::min(static_cast<int>(std::floor(fy)), 4);
        const double ax = fx - x0, ay = fy - y0;
        const Eigen::Vector3d oracle = (1 - ax) * (1 - ay) * img.pixel(x0, y0) + ax * (1 - ay) * img.pixel(x0 + 1, y0) +
                                       (1 - ax) * ay * img.pixel(x0, y0 + 1) + ax * ay * img.pixel(x0 + 1, y0 + 1);
        const render::ImageSample s = render::sample_image(img, u);
        CHECK((s.value - oracle).norm() < 1e-14);
        const Eigen::Vector3d dx = (1 - ay) * (img.pixel(x0 + 1, y0) - img.pixel(x0, y0)) +
                                   ay * (img.pixel(x0 + 1, y0 + 1) - img.pixel(x0, y0 + 1));
        const Eigen::Vector3d dy = (1 - ax) * (img.pixel(x0, y0 + 1) - img.pixel(x0, y0)) +
                                   ax * (img.pixel(x0 + 1, y0 + 1) - img.pixel(x0 + 1, y0));
        CHECK((s.gradient.col(0) - dx).norm() < 1e-13);
        CHECK((s.gradient.col(1) - dy).norm() < 1e-13);
    }
    CHECK_THROWS(render::sample_image(img, {0.2, 3.0}));
    CHECK_THROWS(render::sample_image(img, {3.0, 5.9}));
}

TEST_CASE("render_vertices")
{
    const model::FaceModel m = testing::small_model(3);
    const render::CameraIntrinsics c = render::CameraIntrinsics::for_image(64, 64);
    const model::IdentityParams id{Eigen::VectorXd::Zero(m.identity_dim()), Eigen::VectorXd::Zero(m.appearance_dim())};
    const model::FrameParams f = frontal(m);

    const render::RenderedFrame r = render::render_vertices(m, id, f, c);
    REQUIRE(!r.visible_indices.empty());
    for (int i : r.visible_indices)
        CHECK((r.colors.col(i) - Eigen::Vector3d(0.8, 0.6, 0.5)).norm() < 1e-15);

    // Deterministic.
    const render::RenderedFrame again = render::render_vertices(m, id, f, c);
    CHECK(again.colors == r.colors);
    CHECK(again.visible_indices == r.visible_indices);

    // Landmark motion under a small yaw matches the analytic chain rule.
    const auto dr = render::rotation_matrix_derivatives(f.rotation);
    for (int lm : {0, 17, 33, 48})
    {
        const int v = m.mesh.landmark_vertex_indices[static_cast<std::size_t>(lm)];
        const Eigen::Matrix<double, 2, 3> jp = render::projection_jacobian(r.camera_vertices.col(v), c);
        for (int k = 0; k < 3; ++k)
        {
            model::FrameParams plus = f, minus = f;
            plus.rotation(k) += 1e-5;
            minus.rotation(k) -= 1e-5;
            const Eigen::Vector2d fd = (render::render_vertices(m, id, plus, c).screen.col(v) -
                                        render::render_vertices(m, id, minus, c).screen.col(v)) /
                                       2e-5;
            const Eigen::Vector2d analytic = jp * (dr[static_cast<std::size_t>(k)] * r.vertices.col(v));
            CHECK((analytic - fd).norm() / std::max(1e-8, analytic.norm()) < 1e-4);
        }
    }
}

TEST_CASE("preview rasterization")
{
    const Image background(32, 24, Eigen::Vector3d(0.1, 0.2, 0.3));
    const model::FaceModel m = testing::small_model(3);
    const render::CameraIntrinsics c = render::CameraIntrinsics::for_image(32, 24);
    const model::IdentityParams id{Eigen::VectorXd::Zero(m.identity_dim()), Eigen::VectorXd::Zero(m.appearance_dim())};

    SUBCASE("nothing in view leaves the background")
    {
        model::FrameParams away = frontal(m);
        away.translation.z() = -10.0;
        const render::RenderedFrame r = render::render_vertices(m, id, away, c);
        CHECK(r.visible_indices.empty());
        CHECK(render::rasterize_preview(r, m.mesh.faces, background) == background);
    }
    SUBCASE("a screen-filling triangle paints a constant image")
    {
        Eigen::Matrix3Xd v(3, 3);
        v << -10, -10, 30, -10, 30, -10, 1, 1, 1;
        Eigen::Matrix3Xi f(3, 1);
        f << 0, 1, 2;
        const Eigen::Matrix3Xd albedo = Eigen::Vector3d(0.6, 0.5, 0.4).replicate(1, 3);
        model::FrameParams p;
        p.gamma = model::ambient_light(1.0);
        const render::RenderedFrame r = render::render_frame(f, v, albedo, p, c);
        const Image out = render::rasterize_preview(r, f, background);
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
                CHECK((out.pixel(x, y) - Eigen::Vector3d(0.6, 0.5, 0.4)).norm() < 1e-12);
    }
}
