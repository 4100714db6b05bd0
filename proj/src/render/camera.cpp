/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/render/camera.cpp
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
#include "facelearn/render/camera.hpp"

#include "Eigen/Geometry"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace facelearn {
namespace render {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w)
{
    Eigen::Matrix3d k;
    k << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return k;
}

// Rodrigues coefficients A = sin(t)/t, B = (1 - cos(t))/t^2 and their radial
// derivatives divided by t, with Taylor expansions near zero.
struct RodriguesCoefficients
{
    double a, b, da_over_t, db_over_t;
};

RodriguesCoefficients rodrigues_coefficients(double theta)
{
    if (theta < 1e-4)
    {
        const double t2 = theta * theta;
        return {1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
                -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0, -1.0 / 12.0 + t2 / 180.0 - t2 * t2 / 6720.0};
    }
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double t2 = theta * theta;
    return {s / theta, (1.0 - c) / t2, (theta * c - s) / (t2 * theta), (theta * s - 2.0 * (1.0 - c)) / (t2 * t2)};
}

} // namespace

CameraIntrinsics CameraIntrinsics::for_image(int width, int height)
{
    CameraIntrinsics k;
    k.fx = 1.2 * width;
    k.fy = 1.2 * width;
    k.cx = 0.5 * width;
    k.cy = 0.5 * height;
    k.width = width;
    k.height = height;
    return k;
}

void CameraIntrinsics::validate() const
{
    if (!(fx > 0.0 && fy > 0.0))
        throw std::invalid_argument("focal lengths must be positive");
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
        throw std::invalid_argument("principal point must lie inside the image");
}

Eigen::Matrix3d rotation_matrix(const Eigen::Vector3d& axis_angle)
{
    const auto coeff = rodrigues_coefficients(axis_angle.norm());
    const Eigen::Matrix3d k = skew(axis_angle);
    return Eigen::Matrix3d::Identity() + coeff.a * k + coeff.b * k * k;
}

std::array<Eigen::Matrix3d, 3> rotation_matrix_derivatives(const Eigen::Vector3d& axis_angle)
{
    const auto coeff = rodrigues_coefficients(axis_angle.norm());
    const Eigen::Matrix3d k = skew(axis_angle);
    const Eigen::Matrix3d k2 = k * k;
    std::array<Eigen::Matrix3d, 3> out;
    for (int i = 0; i < 3; ++i)
    {
        const Eigen::Matrix3d e = skew(Eigen::Vector3d::Unit(i));
        const double w = axis_angle(i);
        out[static_cast<std::size_t>(i)] =
            coeff.da_over_t * w * k + coeff.a * e + coeff.db_over_t * w * k2 + coeff.b * (e * k + k * e);
    }
    return out;
}

Eigen::Vector3d wrap_axis_angle(const Eigen::Vector3d& axis_angle)
{
    const double theta = axis_angle.norm();
    if (theta <= std::numbers::pi)
        return axis_angle;
    const double wrapped = std::remainder(theta, 2.0 * std::numbers::pi);
    return axis_angle * (wrapped / theta);
}

Eigen::Vector3d rigid_transform(const Eigen::Vector3d& v, const Eigen::Vector3d& axis_angle,
                                const Eigen::Vector3d& translation)
{
    return rotation_matrix(axis_angle) * v + translation;
}

std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& p, const CameraIntrinsics& k)
{
    if (!(p.z() > near_plane))
        return std::nullopt;
    return Eigen::Vector2d(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& p, const CameraIntrinsics& k)
{
    const double iz = 1.0 / p.z();
    Eigen::Matrix<double, 2, 3> j;
    j << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz, 0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
    return j;
}

Eigen::Vector3d unproject(const Eigen::Vector2d& screen, double depth, const CameraIntrinsics& k)
{
    return {(screen.x() - k.cx) * depth / k.fx, (screen.y() - k.cy) * depth / k.fy, depth};
}

} // namespace render
} // namespace facelearn
