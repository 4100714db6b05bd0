/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/mesh/mesh.cpp
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
#include "facelearn/mesh/mesh.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace facelearn {
namespace mesh {

void Mesh::validate() const
{
    const int n = num_vertices();
    for (int f = 0; f < num_faces(); ++f)
        for (int k = 0; k < 3; ++k)
            if (faces(k, f) < 0 || faces(k, f) >= n)
                throw std::invalid_argument("face " + std::to_string(f) + " references vertex " +
                                            std::to_string(faces(k, f)) + " but the mesh has " + std::to_string(n) +
                                            " vertices");
    if (colors)
    {
        if (colors->cols() != n)
            throw std::invalid_argument("color count does not match vertex count");
        if ((colors->array() < 0.0).any() || (colors->array() > 1.0).any())
            throw std::invalid_argument("vertex colors must lie in [0, 1]");
    }
    std::set<int> seen;
    for (int idx : landmark_vertex_indices)
    {
        if (idx < 0 || idx >= n)
            throw std::invalid_argument("landmark vertex index " + std::to_string(idx) + " out of range");
        if (!seen.insert(idx).second)
            throw std::invalid_argument("duplicate landmark vertex index " + std::to_string(idx));
    }
}

Mesh load_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open mesh file: " + path.string());

    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector3d> colors;
    std::vector<Eigen::Vector3i> faces;
    std::vector<int> face_lines;
    std::string line;
    int line_number = 0;
    auto fail = [&](const std::string& message) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": " + message);
    };

    while (std::getline(in, line))
    {
        ++line_number;
        std::istringstream tokens(line);
        std::string keyword;
        if (!(tokens >> keyword) || keyword[0] == '#')
            continue;
        if (keyword == "v")
        {
            std::vector<double> values;
            double v;
            while (tokens >> v)
                values.push_back(v);
            if (!tokens.eof())
                fail("malformed vertex record");
            if (values.size() != 3 && values.size() != 6)
                fail("vertex record needs 3 coordinates and optionally 3 color values");
            positions.emplace_back(values[0], values[1], values[2]);
            if (values.size() == 6)
            {
                if (colors.size() + 1 != positions.size())
                    fail("vertex colors must be given for all vertices or none");
                colors.emplace_back(values[3], values[4], values[5]);
            }
            else if (!colors.empty())
                fail("vertex colors must be given for all vertices or none");
        }
        else if (keyword == "f")
        {
            std::vector<int> ids;
            std::string token;
            while (tokens >> token)
            {
                const std::string head = token.substr(0, token.find('/'));
                std::size_t consumed = 0;
                int id = 0;
                try
                {
                    id = std::stoi(head, &consumed);
                }
                catch (const std::exception&)
                {
                    fail("malformed face index '" + token + "'");
                }
                if (consumed != head.size() || id < 1)
                    fail("malformed face index '" + token + "'");
                ids.push_back(id - 1);
            }
            if (ids.size() != 3)
                fail("only triangle faces are supported, found a face with " + std::to_string(ids.size()) +
                     " vertices");
            faces.emplace_back(ids[0], ids[1], ids[2]);
            face_lines.push_back(line_number);
        }
        // vt, vn, o, g, s, usemtl, mtllib and similar records carry nothing we use.
    }

    if (!colors.empty() && colors.size() != positions.size())
        throw std::runtime_error(path.string() + ": vertex colors must be given for all vertices or none");

    Mesh mesh;
    mesh.vertices.resize(3, static_cast<Eigen::Index>(positions.size()));
    for (std::size_t i = 0; i < positions.size(); ++i)
        mesh.vertices.col(static_cast<Eigen::Index>(i)) = positions[i];
    mesh.faces.resize(3, static_cast<Eigen::Index>(faces.size()));
    for (std::size_t f = 0; f < faces.size(); ++f)
    {
        for (int k = 0; k < 3; ++k)
            if (faces[f][k] >= static_cast<int>(positions.size()))
                throw std::runtime_error(path.string() + ":" + std::to_string(face_lines[f]) +
                                         ": face references vertex " + std::to_string(faces[f][k] + 1) +
                                         " but the file defines " + std::to_string(positions.size()));
        mesh.faces.col(static_cast<Eigen::Index>(f)) = faces[f];
    }
    if (!colors.empty())
    {
        Eigen::Matrix3Xd c(3, static_cast<Eigen::Index>(colors.size()));
        for (std::size_t i = 0; i < colors.size(); ++i)
        {
            if ((colors[i].array() < 0.0).any() || (colors[i].array() > 1.0).any())
                throw std::runtime_error(path.string() + ": vertex " + std::to_string(i + 1) +
                                         " has a color outside [0, 1]");
            c.col(static_cast<Eigen::Index>(i)) = colors[i];
        }
        mesh.colors = std::move(c);
    }
    return mesh;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open mesh file for writing: " + path.string());
    out << std::setprecision(17);
    for (int i = 0; i < mesh.num_vertices(); ++i)
    {
        out << "v " << mesh.vertices(0, i) << ' ' << mesh.vertices(1, i) << ' ' << mesh.vertices(2, i);
        if (mesh.colors)
            out << ' ' << (*mesh.colors)(0, i) << ' ' << (*mesh.colors)(1, i) << ' ' << (*mesh.colors)(2, i);
        out << '\n';
    }
    for (int f = 0; f < mesh.num_faces(); ++f)
        out << "f " << mesh.faces(0, f) + 1 << ' ' << mesh.faces(1, f) + 1 << ' ' << mesh.faces(2, f) + 1 << '\n';
}

std::vector<int> load_landmark_indices(const std::filesystem::path& path, int expected)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open landmark index file: " + path.string());
    std::vector<int> out;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        std::istringstream tokens(line);
        int idx;
        if (!(tokens >> idx))
        {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": expected a vertex index");
        }
        out.push_back(idx);
    }
    if (static_cast<int>(out.size()) != expected)
        throw std::runtime_error(path.string() + ": expected " + std::to_string(expected) + " landmark indices, found " +
                                 std::to_string(out.size()));
    return out;
}

void save_landmark_indices(const std::vector<int>& indices, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open landmark index file for writing: " + path.string());
    for (int idx : indices)
        out << idx << '\n';
}

Eigen::Matrix3Xd compute_vertex_normals(const Eigen::Matrix3Xi& faces, const Eigen::Matrix3Xd& positions)
{
    Eigen::Matrix3Xd sums = Eigen::Matrix3Xd::Zero(3, positions.cols());
    for (Eigen::Index f = 0; f < faces.cols(); ++f)
    {
        const Eigen::Vector3d p0 = positions.col(faces(0, f));
        const Eigen::Vector3d e1 = positions.col(faces(1, f)) - p0;
        const Eigen::Vector3d e2 = positions.col(faces(2, f)) - p0;
        // |e1 x e2| is twice the triangle area, so the raw cross product is already area weighted.
        const Eigen::Vector3d n = e1.cross(e2);
        for (int k = 0; k < 3; ++k)
            sums.col(faces(k, f)) += n;
    }
    Eigen::Matrix3Xd normals(3, positions.cols());
    for (Eigen::Index i = 0; i < positions.cols(); ++i)
    {
        const double length = sums.col(i).norm();
        normals.col(i) = length > 1e-12 ? Eigen::Vector3d(sums.col(i) / length) : Eigen::Vector3d::UnitZ();
    }
    return normals;
}

std::vector<std::vector<int>> vertex_adjacency(const Eigen::Matrix3Xi& faces, int num_vertices)
{
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(num_vertices));
    for (Eigen::Index f = 0; f < faces.cols(); ++f)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (a != b)
                    adjacency[static_cast<std::size_t>(faces(a, f))].push_back(faces(b, f));
    for (auto& ring : adjacency)
    {
        std::sort(ring.begin(), ring.end());
        ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    }
    return adjacency;
}

double bounding_box_diagonal(const Eigen::Matrix3Xd& positions)
{
    if (positions.cols() == 0)
        return 0.0;
    return (positions.rowwise().maxCoeff() - positions.rowwise().minCoeff()).norm();
}

} // namespace mesh
} // namespace facelearn
