/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/model/face_model.hpp
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

#include "facelearn/mesh/deformation_graph.hpp"
#include "facelearn/mesh/mesh.hpp"
#include "facelearn/model/params.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace facelearn {
namespace model {

/// Fixed blendshape expression basis with the per-blendshape standard deviations.
struct Blendshapes
{
    Eigen::MatrixXd basis;  ///< 3|V| x b
    Eigen::VectorXd sigmas; ///< b, strictly positive
};

Blendshapes load_blendshapes(const std::filesystem::path& path);
void save_blendshapes(const Blendshapes& blendshapes, const std::filesystem::path& path);

/**
 * The learnable face identity model.
 *
 * Geometry lives on the deformation graph: a graph displacement
 * OCL(geom_basis) * alpha is skinned to the mesh, and the fixed blendshapes
 * add the expression on top. Appearance is a per-vertex linear RGB model.
 * `graph_blendshapes` has orthonormal columns and `geom_basis` is kept in their
 * orthogonal complement.
 */
struct FaceModel
{
    mesh::Mesh mesh; ///< Topology and landmark ids; positions equal mean_shape.
    mesh::DeformationGraph graph;
    mesh::SkinningMatrix skinning;
    std::vector<std::vector<int>> vertex_neighbors; ///< 1-ring, used by the sparsity prior.

    Eigen::VectorXd mean_shape;        ///< 3|V|
    Eigen::VectorXd mean_graph;        ///< 3|G|
    Eigen::MatrixXd geom_basis;        ///< 3|G| x g
    Eigen::MatrixXd blendshapes;       ///< 3|V| x b
    Eigen::MatrixXd graph_blendshapes; ///< 3|G| x b, orthonormal columns
    Eigen::VectorXd appear_mean;       ///< 3|V|, RGB
    Eigen::MatrixXd appear_basis;      ///< 3|V| x |beta|
    Eigen::VectorXd expression_sigmas; ///< b

    int num_vertices() const { return mesh.num_vertices(); }
    int num_nodes() const { return graph.num_nodes(); }
    int identity_dim() const { return static_cast<int>(geom_basis.cols()); }
    int appearance_dim() const { return static_cast<int>(appear_basis.cols()); }
    int expression_dim() const { return static_cast<int>(blendshapes.cols()); }

    /// Checks dimensions, sigma positivity and orthonormality of graph_blendshapes.
    void validate() const;
};

/**
 * Least-squares graph-domain blendshapes: argmin_X ||S X - B||_F, solved per
 * column through the sparse normal equations. Throws naming the first node
 * that skins no vertex when S lacks full column rank.
 */
Eigen::MatrixXd fit_graph_blendshapes(const Eigen::MatrixXd& blendshapes, const mesh::SkinningMatrix& skinning);

/**
 * Modified Gram-Schmidt with one re-orthogonalisation pass. Keeps the column
 * span; throws naming the column whose residual falls below 1e-10 of its
 * original norm.
 */
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& matrix);

/// Orthogonal complement projection Theta - B (B^T Theta) for orthonormal B.
Eigen::MatrixXd ocl_project(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& graph_blendshapes);

/// Same projection with the general (B^T B)^{-1} factor; B only needs full column rank.
Eigen::MatrixXd ocl_project_general(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& graph_blendshapes);

/// OCL(geom_basis) * alpha, the identity displacement of every graph node.
Eigen::VectorXd graph_displacement(const FaceModel& model, const Eigen::VectorXd& alpha);

/// mean_graph + OCL(geom_basis) * alpha.
Eigen::VectorXd assemble_graph(const FaceModel& model, const Eigen::VectorXd& alpha);

/// mean_shape + S * OCL(geom_basis) * alpha + B * delta, with S applied sparsely.
Eigen::VectorXd assemble_vertices(const FaceModel& model, const Eigen::VectorXd& alpha, const Eigen::VectorXd& delta);

/// appear_mean + appear_basis * beta, unclamped.
Eigen::VectorXd assemble_appearance(const FaceModel& model, const Eigen::VectorXd& beta);

struct InitOptions
{
    int node_count = 100;
    int skinning_k = 4;
    int identity_dim = 16;
    int appearance_dim = 8;
    std::uint64_t seed = 0;
    Eigen::Vector3d skin_tone{0.8, 0.6, 0.5};
};

/**
 * Builds a fresh model around a mean mesh and a fixed blendshape basis: graph,
 * skinning, orthonormal graph blendshapes, a constant skin-tone appearance
 * mean, and small Gaussian bases (std 1e-3 x bounding-box diagonal for
 * geometry, 1e-3 for appearance) drawn from `seed`. The geometry basis is
 * projected into the blendshape complement right away.
 */
FaceModel init_model(const mesh::Mesh& mesh, const Blendshapes& blendshapes, const InitOptions& options);

/// Recomputes the derived members (graph neighbourhoods, vertex 1-rings).
void rebuild_topology(FaceModel& model);

void save_model(const FaceModel& model, const std::filesystem::path& path);
FaceModel load_model(const std::filesystem::path& path);

} // namespace model
} // namespace facelearn
