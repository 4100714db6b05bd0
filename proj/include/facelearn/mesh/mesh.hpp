/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/mesh/mesh.hpp
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

#include <filesystem>
#include <optional>
#include <vector>

namespace facelearn {
namespace mesh {

/// Number of sparse facial feature points tied to mesh vertices.
inline constexpr int num_landmarks = 66;

/**
 * Triangle mesh with optional per-vertex colors and the vertex ids of the 66
 * facial landmarks.
 *
 * Positions are stored column-wise, so the memory of `vertices` is exactly the
 * stacked 3|V| vector (x0, y0, z0, x1, ...) used throughout the model code.
 * Triangles are oriented counter-clockwise around their outward normal.
 */
struct Mesh
{
    Eigen::Matrix3Xd vertices;
    Eigen::Matrix3Xi faces;
    std::optional<Eigen::Matrix3Xd> colors; ///< RGB in [0, 1], one column per vertex.
    std::vector<int> landmark_vertex_indices;

    int num_vertices() const { return static_cast<int>(vertices.cols()); }
    int num_faces() const { return static_cast<int>(faces.cols()); }

    /// Throws std::invalid_argument if an index or color is out of range.
    void validate() const;
};

/**
 * Loads a mesh in the ASCII OBJ subset documented in docs/formats.md:
 * `v x y z [r g b]` and triangular `f a b c` records (1-based indices, optional
 * `/vt/vn` suffixes ignored). Errors carry the file name and line number.
 */
Mesh load_mesh(const std::filesystem::path& path);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

/// Sidecar landmark file: one vertex index per line, exactly `expected` lines.
std::vector<int> load_landmark_indices(const std::filesystem::path& path, int expected = num_landmarks);
void save_landmark_indices(const std::vector<int>& indices, const std::filesystem::path& path);

/**
 * Area-weighted vertex normals for the given positions (same topology as
 * `faces`). Degenerate triangles contribute nothing; a vertex whose incident
 * triangles are all degenerate gets the fallback normal (0, 0, 1).
 */
Eigen::Matrix3Xd compute_vertex_normals(const Eigen::Matrix3Xi& faces, const Eigen::Matrix3Xd& positions);

/// Sorted 1-ring neighbours of every vertex.
std::vector<std::vector<int>> vertex_adjacency(const Eigen::Matrix3Xi& faces, int num_vertices);

/// Diagonal length of the axis-aligned bounding box of the positions.
double bounding_box_diagonal(const Eigen::Matrix3Xd& positions);

} // namespace mesh
} // namespace facelearn
