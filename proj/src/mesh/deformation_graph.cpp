/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/mesh/deformation_graph.cpp
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
#include "facelearn/mesh/deformation_graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace facelearn {
namespace mesh {

DeformationGraph build_deformation_graph(const Mesh& mesh, int node_count)
{
    const int n = mesh.num_vertices();
    if (node_count < 1 || node_count > n)
        throw std::invalid_argument("node_count must lie in [1, " + std::to_string(n) + "], got " +
                                    std::to_string(node_count));

    DeformationGraph graph;
    graph.node_vertices.reserve(static_cast<std::size_t>(node_count));
    std::vector<double> distance(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    int next = 0;
    for (int k = 0; k < node_count; ++k)
    {
        graph.node_vertices.push_back(next);
        const Eigen::Vector3d p = mesh.vertices.col(next);
        int best = -1;
        double best_distance = -1.0;
        for (int i = 0; i < n; ++i)
        {
            const double d = (mesh.vertices.col(i) - p).squaredNorm();
            auto& di = distance[static_cast<std::size_t>(i)];
            di = std::min(di, d);
            if (di > best_distance)
            {
                best_distance = di;
                best = i;
            }
        }
        next = best;
    }
    graph.node_positions.resize(3, node_count);
    for (int k = 0; k < node_count; ++k)
        graph.node_positions.col(k) = mesh.vertices.col(graph.node_vertices[static_cast<std::size_t>(k)]);
    graph.neighborhoods.assign(static_cast<std::size_t>(node_count), {});
    return graph;
}

SkinningMatrix::SkinningMatrix(int num_vertices, int num_nodes, int influences, std::vector<int> nodes,
                               std::vector<double> weights)
    : num_vertices_(num_vertices), num_nodes_(num_nodes), influences_(influences), nodes_(std::move(nodes)),
      weights_(std::move(weights))
{
    const auto expected = static_cast<std::size_t>(num_vertices) * static_cast<std::size_t>(influences);
    if (nodes_.size() != expected || weights_.size() != expected)
        throw std::invalid_argument("skinning arrays must hold num_vertices * influences entries");
    for (int node : nodes_)
        if (node < 0 || node >= num_nodes)
            throw std::invalid_argument("skinning references node " + std::to_string(node) + " outside the graph");
    for (double w : weights_)
        if (!(w >= 0.0))
            throw std::invalid_argument("skinning weights must be nonnegative");
}

Eigen::VectorXd SkinningMatrix::apply(const Eigen::Ref<const Eigen::VectorXd>& node_values) const
{
    if (node_values.size() != 3 * num_nodes_)
        throw std::invalid_argument("skinning apply: expected a 3|G| vector");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * num_vertices_);
    for (int v = 0; v < num_vertices_; ++v)
    {
        const auto ns = nodes(v);
        const auto ws = weights(v);
        for (int k = 0; k < influences_; ++k)
            out.segment<3>(3 * v) += ws[static_cast<std::size_t>(k)] * node_values.segment<3>(3 * ns[static_cast<std::size_t>(k)]);
    }
    return out;
}

Eigen::VectorXd SkinningMatrix::apply_transpose(const Eigen::Ref<const Eigen::VectorXd>& vertex_values) const
{
    if (vertex_values.size() != 3 * num_vertices_)
        throw std::invalid_argument("skinning apply_transpose: expected a 3|V| vector");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * num_nodes_);
    for (int v = 0; v < num_vertices_; ++v)
    {
        const auto ns = nodes(v);
        const auto ws = weights(v);
        for (int k = 0; k < influences_; ++k)
            out.segment<3>(3 * ns[static_cast<std::size_t>(k)]) += ws[static_cast<std::size_t>(k)] * vertex_values.segment<3>(3 * v);
    }
    return out;
}

Eigen::SparseMatrix<double> SkinningMatrix::weight_matrix() const
{
    std::vector<Eigen::Triplet<double>> triplets;
    for (int v = 0; v < num_vertices_; ++v)
        for (int k = 0; k < influences_; ++k)
            if (weights(v)[static_cast<std::size_t>(k)] != 0.0)
                triplets.emplace_back(v, nodes(v)[static_cast<std::size_t>(k)], weights(v)[static_cast<std::size_t>(k)]);
    Eigen::SparseMatrix<double> w(num_vertices_, num_nodes_);
    w.setFromTriplets(triplets.begin(), triplets.end());
    return w;
}

Eigen::SparseMatrix<double> SkinningMatrix::expanded() const
{
    std::vector<Eigen::Triplet<double>> triplets;
    for (int v = 0; v < num_vertices_; ++v)
        for (int k = 0; k < influences_; ++k)
        {
            const double w = weights(v)[static_cast<std::size_t>(k)];
            if (w == 0.0)
                continue;
            const int node = nodes(v)[static_cast<std::size_t>(k)];
            for (int c = 0; c < 3; ++c)
                triplets.emplace_back(3 * v + c, 3 * node + c, w);
        }
    Eigen::SparseMatrix<double> s(3 * num_vertices_, 3 * num_nodes_);
    s.setFromTriplets(triplets.begin(), triplets.end());
    return s;
}

SkinningMatrix build_skinning_matrix(const Mesh& mesh, const DeformationGraph& graph, int k)
{
    const int num_nodes = graph.num_nodes();
    if (k < 1)
        throw std::invalid_argument("skinning support k must be at least 1");
    if (k > num_nodes)
        throw std::invalid_argument("skinning support k = " + std::to_string(k) + " exceeds the graph size " +
                                    std::to_string(num_nodes));

    const int n = mesh.num_vertices();
    const int candidates = std::min(k + 1, num_nodes);
    std::vector<int> nodes(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
    std::vector<double> weights(nodes.size(), 0.0);
    std::vector<int> order(static_cast<std::size_t>(num_nodes));
    std::vector<double> distance(static_cast<std::size_t>(num_nodes));

    for (int v = 0; v < n; ++v)
    {
        for (int j = 0; j < num_nodes; ++j)
            distance[static_cast<std::size_t>(j)] = (mesh.vertices.col(v) - graph.node_positions.col(j)).norm();
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + candidates, order.end(), [&](int a, int b) {
            const double da = distance[static_cast<std::size_t>(a)];
            const double db = distance[static_cast<std::size_t>(b)];
            return da < db || (da == db && a < b);
        });

        int* vn = nodes.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(k);
        double* vw = weights.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(k);
        for (int i = 0; i < k; ++i)
            vn[i] = order[static_cast<std::size_t>(i)];

        const double nearest = distance[static_cast<std::size_t>(order[0])];
        if (nearest <= 1e-12)
        {
            vw[0] = 1.0;
            continue;
        }
        const double reference = candidates > k ? distance[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]
                                                : 2.0 * distance[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])];
        double sum = 0.0;
        for (int i = 0; i < k; ++i)
        {
            const double falloff = 1.0 - distance[static_cast<std::size_t>(vn[i])] / reference;
            vw[i] = falloff * falloff;
            sum += vw[i];
        }
        if (sum <= 0.0)
        {
            // Every candidate sits at the reference distance: fall back to uniform weights.
            for (int i = 0; i < k; ++i)
                vw[i] = 1.0 / k;
            continue;
        }
        for (int i = 0; i < k; ++i)
            vw[i] /= sum;
    }
    return SkinningMatrix(n, num_nodes, k, std::move(nodes), std::move(weights));
}

std::vector<std::vector<int>> graph_neighborhoods(const SkinningMatrix& skinning, const DeformationGraph& graph)
{
    if (skinning.num_nodes() != graph.num_nodes())
        throw std::invalid_argument("skinning was built against a different graph");
    std::vector<std::vector<int>> neighborhoods(static_cast<std::size_t>(graph.num_nodes()));
    for (int v = 0; v < skinning.num_vertices(); ++v)
    {
        const auto ns = skinning.nodes(v);
        const auto ws = skinning.weights(v);
        for (std::size_t a = 0; a < ns.size(); ++a)
            for (std::size_t b = 0; b < ns.size(); ++b)
                if (a != b && ws[a] > 0.0 && ws[b] > 0.0 && ns[a] != ns[b])
                    neighborhoods[static_cast<std::size_t>(ns[a])].push_back(ns[b]);
    }
    for (auto& list : neighborhoods)
    {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return neighborhoods;
}

} // namespace mesh
} // namespace facelearn
