/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/mesh/deformation_graph.hpp
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

#include "facelearn/mesh/mesh.hpp"

#include "Eigen/Core"
#include "Eigen/SparseCore"

#include <span>
#include <vector>

namespace facelearn {
namespace mesh {

/**
 * Coarse deformation graph embedded in a mesh. Nodes are a subset of the mesh
 * vertices; `neighborhoods[i]` lists the nodes that share a skinned vertex with
 * node i (filled in by graph_neighborhoods once the skinning exists).
 */
struct DeformationGraph
{
    std::vector<int> node_vertices;  ///< Mesh vertex id of each node.
    Eigen::Matrix3Xd node_positions; ///< Stacked mean graph, one column per node.
    std::vector<std::vector<int>> neighborhoods;

    int num_nodes() const { return static_cast<int>(node_vertices.size()); }
};

/**
 * Farthest-point samples `node_count` mesh vertices, starting from vertex 0.
 * Ties go to the lowest vertex id, so the result is fully deterministic.
 */
DeformationGraph build_deformation_graph(const Mesh& mesh, int node_count);

/**
 * Sparse linear blend skinning weights for pure node displacements.
 *
 * Every vertex stores exactly k (node, weight) pairs; padding entries carry a
 * zero weight. Acting on a stacked 3|G| node displacement, each weight expands
 * to a 3x3 identity block, giving the stacked 3|V| vertex displacement.
 */
class SkinningMatrix
{
public:
    SkinningMatrix() = default;
    SkinningMatrix(int num_vertices, int num_nodes, int influences, std::vector<int> nodes, std::vector<double> weights);

    int num_vertices() const { return num_vertices_; }
    int num_nodes() const { return num_nodes_; }
    int influences() const { return influences_; }

    std::span<const int> nodes(int vertex) const
    {
        return {nodes_.data() + static_cast<std::size_t>(vertex) * static_cast<std::size_t>(influences_),
                static_cast<std::size_t>(influences_)};
    }
    std::span<const double> weights(int vertex) const
    {
        return {weights_.data() + static_cast<std::size_t>(vertex) * static_cast<std::size_t>(influences_),
                static_cast<std::size_t>(influences_)};
    }
    const std::vector<int>& all_nodes() const { return nodes_; }
    const std::vector<double>& all_weights() const { return weights_; }

    /// 3|G| node displacement -> 3|V| vertex displacement.
    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& node_values) const;
    /// Transpose action, 3|V| -> 3|G|.
    Eigen::VectorXd apply_transpose(const Eigen::Ref<const Eigen::VectorXd>& vertex_values) const;

    /// Scalar |V| x |G| weight matrix W; the full operator is W (x) I_3.
    Eigen::SparseMatrix<double> weight_matrix() const;
    /// Full 3|V| x 3|G| operator.
    Eigen::SparseMatrix<double> expanded() const;

private:
    int num_vertices_ = 0;
    int num_nodes_ = 0;
    int influences_ = 0;
    std::vector<int> nodes_;
    std::vector<double> weights_;
};

/**
 * Binds every vertex to its k nearest nodes (on the mean shape) with weights
 * proportional to (1 - d / d_ref)^2, normalised to sum to one. d_ref is the
 * distance to the (k+1)-th nearest node, or twice the k-th distance when the
 * graph has only k nodes. A vertex coinciding with a node is bound to it alone.
 */
SkinningMatrix build_skinning_matrix(const Mesh& mesh, const DeformationGraph& graph, int k = 4);

/// j is a neighbour of i iff some vertex has nonzero weight on both (i != j).
std::vector<std::vector<int>> graph_neighborhoods(const SkinningMatrix& skinning, const DeformationGraph& graph);

} // namespace mesh
} // namespace facelearn
