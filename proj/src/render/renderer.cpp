/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/render/renderer.cpp
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
#include "facelearn/render/renderer.hpp"

#include "facelearn/mesh/mesh.hpp"
#include "facelearn/render/shading.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace facelearn {
namespace render {

namespace {

bool inside_with_margin(const Eigen::Vector2d& u, const CameraIntrinsics& k)
{
    return u.x() >= 1.0 && u.x() <= k.width - 1.0 && u.y() >= 1.0 && u.y() <= k.height - 1.0;
}

} // namespace

std::vector<int> visible_set(const Eigen::Matrix3Xd& camera_vertices, const Eigen::Matrix3Xd& camera_normals,
                             const CameraIntrinsics& intrinsics)
{
    std::vector<int> out;
    for (Eigen::Index i = 0; i < camera_vertices.cols(); ++i)
    {
        const Eigen::Vector3d p = camera_vertices.col(i);
        if (!(camera_normals.col(i).dot(p) < 0.0))
            continue;
        const auto u = project(p, intrinsics);
        if (u && inside_with_margin(*u, intrinsics))
            out.push_back(static_cast<int>(i));
    }
    return out;
}

RenderedFrame render_frame(const Eigen::Matrix3Xi& faces, const Eigen::Matrix3Xd& vertices,
                           const Eigen::Matrix3Xd& albedo, const model::FrameParams& frame,
                           const CameraIntrinsics& intrinsics)
{
    const Eigen::Index n = vertices.cols();
    if (albedo.cols() != n)
        throw std::invalid_argument("render_frame: albedo and vertex counts differ");
    if (frame.gamma.size() != model::num_sh_coefficients)
        throw std::invalid_argument("render_frame: illumination needs 27 coefficients");

    RenderedFrame r;
    r.vertices = vertices;
    r.normal_sums = Eigen::Matrix3Xd::Zero(3, n);
    for (Eigen::Index f = 0; f < faces.cols(); ++f)
    {
        const Eigen::Vector3d p0 = vertices.col(faces(0, f));
        const Eigen::Vector3d c = (vertices.col(faces(1, f)) - p0).cross(vertices.col(faces(2, f)) - p0);
        for (int k = 0; k < 3; ++k)
            r.normal_sums.col(faces(k, f)) += c;
    }
    r.normals.resize(3, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double length = r.normal_sums.col(i).norm();
        r.normals.col(i) = length > 1e-12 ? Eigen::Vector3d(r.normal_sums.col(i) / length) : Eigen::Vector3d::UnitZ();
    }

    r.rotation = rotation_matrix(frame.rotation);
    r.camera_vertices = (r.rotation * vertices).colwise() + frame.translation;
    r.camera_normals = r.rotation * r.normals;

    Eigen::Matrix<double, 3, 9> light;
    for (int b = 0; b < 9; ++b)
        light.col(b) = frame.gamma.segment<3>(3 * b);

    r.screen.resize(2, n);
    r.sh.resize(9, n);
    r.in_front.assign(static_cast<std::size_t>(n), 0);
    r.visible.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const Eigen::Vector3d p = r.camera_vertices.col(i);
        if (const auto u = project(p, intrinsics))
        {
            r.screen.col(i) = *u;
            r.in_front[static_cast<std::size_t>(i)] = 1;
        }
        else
            r.screen.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        r.sh.col(i) = sh_basis(r.camera_normals.col(i));
    }
    r.irradiance = light * r.sh;
    r.colors = albedo.cwiseProduct(r.irradiance);
    r.visible_indices = visible_set(r.camera_vertices, r.camera_normals, intrinsics);
    for (int i : r.visible_indices)
        r.visible[static_cast<std::size_t>(i)] = 1;
    return r;
}

RenderedFrame render_vertices(const model::FaceModel& model, const model::IdentityParams& identity,
                              const model::FrameParams& frame, const CameraIntrinsics& intrinsics)
{
    const Eigen::VectorXd v = model::assemble_vertices(model, identity.alpha, frame.delta);
    const Eigen::VectorXd a = model::assemble_appearance(model, identity.beta);
    const auto n = model.num_vertices();
    return render_frame(model.mesh.faces, Eigen::Map<const Eigen::Matrix3Xd>(v.data(), 3, n),
                        Eigen::Map<const Eigen::Matrix3Xd>(a.data(), 3, n), frame, intrinsics);
}

Image rasterize_preview(const RenderedFrame& frame, const Eigen::Matrix3Xi& faces, const Image& background,
                        int edge_padding)
{
    return rasterize_preview(frame, frame.colors, faces, background, edge_padding);
}

Image rasterize_preview(const RenderedFrame& frame, const Eigen::Matrix3Xd& vertex_colors,
                        const Eigen::Matrix3Xi& faces, const Image& background, int edge_padding)
{
    const int w = background.width();
    const int h = background.height();
    Image image = background;
    std::vector<double> depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
                              std::numeric_limits<double>::infinity());
    std::vector<int> owner(depth.size(), -1);

    // Screen-space affine interpolation: value(x, y) = plane.dot((x, y, 1)).
    auto barycentric = [&](int f, double x, double y, Eigen::Vector3d& bary) {
        const Eigen::Vector2d a = frame.screen.col(faces(0, f));
        const Eigen::Vector2d b = frame.screen.col(faces(1, f));
        const Eigen::Vector2d c = frame.screen.col(faces(2, f));
        const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        if (std::abs(area) < 1e-12)
            return false;
        const Eigen::Vector2d p(x, y);
        bary(1) = ((p - a).x() * (c - a).y() - (p - a).y() * (c - a).x()) / area;
        bary(2) = ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x()) / area;
        bary(0) = 1.0 - bary(1) - bary(2);
        return true;
    };
    auto interpolate = [&](int f, const Eigen::Vector3d& bary) {
        return Eigen::Vector3d(bary(0) * vertex_colors.col(faces(0, f)) + bary(1) * vertex_colors.col(faces(1, f)) +
                               bary(2) * vertex_colors.col(faces(2, f)));
    };

    for (int f = 0; f < faces.cols(); ++f)
    {
        const int i0 = faces(0, f), i1 = faces(1, f), i2 = faces(2, f);
        if (!frame.in_front[static_cast<std::size_t>(i0)] || !frame.in_front[static_cast<std::size_t>(i1)] ||
            !frame.in_front[static_cast<std::size_t>(i2)])
            continue;
        const Eigen::Vector3d q0 = frame.camera_vertices.col(i0);
        const Eigen::Vector3d fn = (frame.camera_vertices.col(i1) - q0).cross(frame.camera_vertices.col(i2) - q0);
        if (!(fn.dot(q0 + frame.camera_vertices.col(i1) + frame.camera_vertices.col(i2)) < 0.0))
            continue;

        const Eigen::Vector2d a = frame.screen.col(i0), b = frame.screen.col(i1), c = frame.screen.col(i2);
        const int x_min = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
        const int x_max = std::min(w - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) - 0.5)));
        const int y_min = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
        const int y_max = std::min(h - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) - 0.5)));
        for (int y = y_min; y <= y_max; ++y)
            for (int x = x_min; x <= x_max; ++x)
            {
                Eigen::Vector3d bary;
                if (!barycentric(f, x + 0.5, y + 0.5, bary) || bary.minCoeff() < -1e-9)
                    continue;
                const double z = bary(0) * q0.z() + bary(1) * frame.camera_vertices(2, i1) +
                                 bary(2) * frame.camera_vertices(2, i2);
                const auto idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
                if (z >= depth[idx])
                    continue;
                depth[idx] = z;
                owner[idx] = f;
                image.set_pixel(x, y, interpolate(f, bary));
            }
    }

    // Barycentrics of the point of triangle f closest to p, and its distance.
    auto closest_point = [&](int f, const Eigen::Vector2d& p, Eigen::Vector3d& bary) {
        if (barycentric(f, p.x(), p.y(), bary) && bary.minCoeff() >= 0.0)
            return 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (int e = 0; e < 3; ++e)
        {
            const int ia = e, ib = (e + 1) % 3;
            const Eigen::Vector2d a = frame.screen.col(faces(ia, f));
            const Eigen::Vector2d b = frame.screen.col(faces(ib, f));
            const Eigen::Vector2d ab = b - a;
            const double len2 = ab.squaredNorm();
            const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
            const double d = (a + s * ab - p).norm();
            if (d < best)
            {
                best = d;
                bary.setZero();
                bary(ia) = 1.0 - s;
                bary(ib) = s;
            }
        }
        return best;
    };

    static constexpr int dx[8] = {-1, 1, 0, 0, -1, 1, -1, 1};
    static constexpr int dy[8] = {0, 0, -1, 1, -1, -1, 1, 1};
    for (int ring = 0; ring < edge_padding; ++ring)
    {
        std::vector<int> next = owner;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
            {
                const auto idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
                if (owner[idx] >= 0)
                    continue;
                // Color of the closest point on any neighboring covered triangle.
                double best = std::numeric_limits<double>::infinity();
                for (int k = 0; k < 8; ++k)
                {
                    const int nx = x + dx[k], ny = y + dy[k];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                        continue;
                    const int f = owner[static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx)];
                    if (f < 0)
                        continue;
                    const Eigen::Vector2d p(x + 0.5, y + 0.5);
                    Eigen::Vector3d bary;
                    const double d = closest_point(f, p, bary);
                    if (d < best)
                    {
                        best = d;
                        image.set_pixel(x, y, interpolate(f, bary));
                        next[idx] = f;
                    }
                }
            }
        owner.swap(next);
    }
    return image;
}

} // namespace render
} // namespace facelearn
