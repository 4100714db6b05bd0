/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: tests/support.hpp
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

// Helpers shared by the unit tests: scratch directories, reference meshes, random matrices.

#include "facelearn/data/synthetic.hpp"
#include "facelearn/mesh/mesh.hpp"
#include "facelearn/model/face_model.hpp"

#include "Eigen/Core"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>

#include <unistd.h>

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("facelearn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = n(rng);
    return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index size, std::mt19937_64& rng, double scale = 1.0)
{
    return random_matrix(size, 1, rng, scale);
}

/// Unit icosphere with outward counter-clockwise triangles, refined `levels` times.
inline facelearn::mesh::Mesh icosphere(int levels)
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v)
        p.normalize();
    std::vector<Eigen::Vector3i> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < levels; ++l)
    {
        std::map<std::pair<int, int>, int> mid;
        const auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end())
                return it->second;
            v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
            const int id = static_cast<int>(v.size()) - 1;
            mid[key] = id;
            return id;
        };
        std::vector<Eigen::Vector3i> next;
        for (const auto& tri : f)
        {
            const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    facelearn::mesh::Mesh mesh;
    mesh.vertices.resize(3, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        mesh.vertices.col(static_cast<Eigen::Index>(i)) = v[i];
    mesh.faces.resize(3, static_cast<Eigen::Index>(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i)
        mesh.faces.col(static_cast<Eigen::Index>(i)) = f[i];
    return mesh;
}

/// Random point cloud "mesh" with a few triangles; enough for graph and skinning tests.
inline facelearn::mesh::Mesh random_cloud(int n, std::mt19937_64& rng)
{
    facelearn::mesh::Mesh mesh;
    mesh.vertices = random_matrix(3, n, rng);
    mesh.faces.resize(3, n - 2);
    for (int i = 0; i + 2 < n; ++i)
        mesh.faces.col(i) = Eigen::Vector3i(i, i + 1, i + 2);
    return mesh;
}

/// Freshly initialised model on the procedural face (grid 14: a couple of hundred vertices).
inline facelearn::model::FaceModel small_model(std::uint64_t seed = 0, int grid = 14, int nodes = 30,
                                               int identity_dim = 6, int appearance_dim = 4)
{
    const facelearn::data::FaceTemplate face = facelearn::data::make_face_template(grid);
    facelearn::model::InitOptions options;
    options.node_count = nodes;
    options.identity_dim = identity_dim;
    options.appearance_dim = appearance_dim;
    options.seed = seed;
    return facelearn::model::init_model(face.mesh, facelearn::data::make_toy_blendshapes(face), options);
}

} // namespace testing
