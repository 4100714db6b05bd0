/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/render/renderer.hpp
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

#include "facelearn/core/image.hpp"
#include "facelearn/model/face_model.hpp"
#include "facelearn/model/params.hpp"
#include "facelearn/render/camera.hpp"

#include "Eigen/Core"

#include <vector>

namespace facelearn {
namespace render {

/**
 * One frame pushed through the image formation pipeline, with every
 * intermediate the backward pass needs. Columns are vertices.
 */
struct RenderedFrame
{
    Eigen::Matrix3Xd vertices;    ///< Model space, identity + expression.
    Eigen::Matrix3Xd normal_sums; ///< Unnormalised area-weighted normals.
    Eigen::Matrix3Xd normals;     ///< Model space unit normals.
    Eigen::Matrix3d rotation;
    Eigen::Matrix3Xd camera_vertices;
    Eigen::Matrix3Xd camera_normals;
    Eigen::Matrix2Xd screen;                    ///< Projections; NaN where in_front is false.
    Eigen::Matrix<double, 9, Eigen::Dynamic> sh; ///< SH basis of each camera-space normal.
    Eigen::Matrix3Xd irradiance;
    Eigen::Matrix3Xd colors; ///< Shaded colors c_i, unclamped.
    std::vector<char> in_front;
    std::vector<char> visible;
    std::vector<int> visible_indices;

    int num_vertices() const { return static_cast<int>(vertices.cols()); }
};

/**
 * Back-face culling visibility: n.v < 0 (the camera sits at the origin), in front
 * of the near plane, and projecting inside the image with a one pixel margin.
 */
std::vector<int> visible_set(const Eigen::Matrix3Xd& camera_vertices, const Eigen::Matrix3Xd& camera_normals,
                             const CameraIntrinsics& intrinsics);

/// Renders explicit model-space positions and albedo under one frame's pose and light.
RenderedFrame render_frame(const Eigen::Matrix3Xi& faces, const Eigen::Matrix3Xd& vertices,
                           const Eigen::Matrix3Xd& albedo, const model::FrameParams& frame,
                           const CameraIntrinsics& intrinsics);

/// assemble_vertices -> normals -> rigid transform -> visibility -> projection -> shading.
RenderedFrame render_vertices(const model::FaceModel& model, const model::IdentityParams& identity,
                              const model::FrameParams& frame, const CameraIntrinsics& intrinsics);

/**
 * Z-buffered rasterisation of the front-facing triangles with Gouraud-
 * interpolated colors over `background`. `edge_padding` extends coverage by
 * that many pixels past the silhouette, each padded pixel taking the color of
 * the closest point on a neighboring covered triangle, so bilinear lookups at
 * boundary vertices stay consistent with their shaded color. Only used for
 * synthesis and previews.
 */
Image rasterize_preview(const RenderedFrame& frame, const Eigen::Matrix3Xi& faces, const Image& background,
                        int edge_padding = 0);

/// Same, with per-vertex colors replaced (albedo or shading-only passes).
Image rasterize_preview(const RenderedFrame& frame, const Eigen::Matrix3Xd& vertex_colors,
                        const Eigen::Matrix3Xi& faces, const Image& background, int edge_padding = 0);

} // namespace render
} // namespace facelearn
