/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/render/camera.hpp
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

#include "Eigen/Core"

#include <array>
#include <optional>

namespace facelearn {
namespace render {

/// Vertices closer to the camera than this (in model units) are never projected.
inline constexpr double near_plane = 0.01;

/// Pinhole intrinsics in pixels. The principal point is a continuous screen coordinate.
struct CameraIntrinsics
{
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    /// fx = fy = 1.2 W, principal point at the image center.
    static CameraIntrinsics for_image(int width, int height);

    void validate() const;
};

/// Exponential map from axis-angle to a rotation matrix (Rodrigues).
Eigen::Matrix3d rotation_matrix(const Eigen::Vector3d& axis_angle);

/// dR/d(axis_angle_k) for k = 0, 1, 2. Exact at the origin and stable near it.
std::array<Eigen::Matrix3d, 3> rotation_matrix_derivatives(const Eigen::Vector3d& axis_angle);

/// Same rotation with |axis_angle| <= pi.
Eigen::Vector3d wrap_axis_angle(const Eigen::Vector3d& axis_angle);

/// R v + t.
Eigen::Vector3d rigid_transform(const Eigen::Vector3d& v, const Eigen::Vector3d& axis_angle,
                                const Eigen::Vector3d& translation);

/// Perspective projection of a camera-space point; empty when it lies on or behind the near plane.
std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& camera_point, const CameraIntrinsics& intrinsics);

/// 2x3 Jacobian of the projection at a camera-space point in front of the near plane.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& camera_point, const CameraIntrinsics& intrinsics);

/// Inverse of project at a known depth.
Eigen::Vector3d unproject(const Eigen::Vector2d& screen, double depth, const CameraIntrinsics& intrinsics);

} // namespace render
} // namespace facelearn
