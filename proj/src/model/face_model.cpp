/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/model/face_model.cpp
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
#include "facelearn/model/face_model.hpp"

#include "facelearn/core/archive.hpp"

#include "Eigen/Cholesky"
#include "Eigen/SparseCholesky"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace facelearn {
namespace model {

Blendshapes load_blendshapes(const std::filesystem::path& path)
{
    const Archive archive = Archive::load(path);
    Blendshapes out{archive.matrix("blendshapes"), archive.vector("expression_sigmas")};
    if (out.sigmas.size() != out.basis.cols())
        throw std::runtime_error(path.string() + ": expression_sigmas does not match the blendshape count");
    return out;
}

void save_blendshapes(const Blendshapes& blendshapes, const std::filesystem::path& path)
{
    Archive archive;
    archive.put("blendshapes", blendshapes.basis);
    archive.put("expression_sigmas", blendshapes.sigmas);
    archive.save(path);
}

void FaceModel::validate() const
{
    const Eigen::Index v3 = 3 * num_vertices();
    const Eigen::Index g3 = 3 * num_nodes();
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw std::invalid_argument(std::string("inconsistent face model: ") + what);
    };
    require(mean_shape.size() == v3, "mean_shape size");
    require(mean_graph.size() == g3, "mean_graph size");
    require(geom_basis.rows() == g3, "geom_basis rows");
    require(blendshapes.rows() == v3, "blendshapes rows");
    require(graph_blendshapes.rows() == g3, "graph_blendshapes rows");
    require(graph_blendshapes.cols() == blendshapes.cols(), "graph_blendshapes columns");
    require(appear_mean.size() == v3, "appear_mean size");
    require(appear_basis.rows() == v3, "appear_basis rows");
    require(expression_sigmas.size() == blendshapes.cols(), "expression_sigmas size");
    require(skinning.num_vertices() == num_vertices() && skinning.num_nodes() == num_nodes(), "skinning dimensions");
    require((expression_sigmas.array() > 0.0).all(), "expression_sigmas must be positive");
    const Eigen::MatrixXd gram = graph_blendshapes.transpose() * graph_blendshapes;
    require((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-10 || gram.size() == 0,
            "graph_blendshapes must have orthonormal columns");
}

Eigen::MatrixXd fit_graph_blendshapes(const Eigen::MatrixXd& blendshapes, const mesh::SkinningMatrix& skinning)
{
    const int nv = skinning.num_vertices();
    const int ng = skinning.num_nodes();
    if (blendshapes.rows() != 3 * nv)
        throw std::invalid_argument("blendshape basis has " + std::to_string(blendshapes.rows()) +
                                    " rows, expected 3|V| = " + std::to_string(3 * nv));

    const Eigen::SparseMatrix<double> w = skinning.weight_matrix();
    const Eigen::SparseMatrix<double> normal = Eigen::SparseMatrix<double>(w.transpose()) * w;
    for (int j = 0; j < ng; ++j)
        if (normal.coeff(j, j) <= 0.0)
            throw std::runtime_error("skinning matrix is rank deficient: node " + std::to_string(j) +
                                     " skins no vertex");

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("skinning normal equations could not be factorised");
    const Eigen::VectorXd pivots = solver.vectorD();
    for (Eigen::Index i = 0; i < pivots.size(); ++i)
        if (pivots(i) <= 1e-14 * normal.diagonal().maxCoeff())
            throw std::runtime_error("skinning matrix is rank deficient near node " +
                                     std::to_string(solver.permutationPinv().indices()(i)));

    // The operator is W (x) I_3, so each coordinate of each blendshape solves against W^T W.
    const Eigen::Index b = blendshapes.cols();
    Eigen::MatrixXd rhs(nv, 3 * b);
    for (Eigen::Index col = 0; col < b; ++col)
        for (int c = 0; c < 3; ++c)
            for (int v = 0; v < nv; ++v)
                rhs(v, 3 * col + c) = blendshapes(3 * v + c, col);
    const Eigen::MatrixXd solution = solver.solve(Eigen::MatrixXd(w.transpose() * rhs));

    Eigen::MatrixXd out(3 * ng, b);
    for (Eigen::Index col = 0; col < b; ++col)
        for (int c = 0; c < 3; ++c)
            for (int j = 0; j < ng; ++j)
                out(3 * j + c, col) = solution(j, 3 * col + c);
    return out;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& matrix)
{
    Eigen::MatrixXd q = matrix;
    for (Eigen::Index j = 0; j < q.cols(); ++j)
    {
        const double original = matrix.col(j).norm();
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < j; ++i)
                q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
        const double residual = q.col(j).norm();
        if (original == 0.0 || residual < 1e-10 * original)
            throw std::runtime_error("orthonormalize: column " + std::to_string(j) +
                                     " is numerically dependent on the preceding columns");
        q.col(j) /= residual;
    }
    return q;
}

Eigen::MatrixXd ocl_project(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& graph_blendshapes)
{
    if (basis.rows() != graph_blendshapes.rows())
        throw std::invalid_argument("ocl_project: basis has " + std::to_string(basis.rows()) +
                                    " rows, blendshapes have " + std::to_string(graph_blendshapes.rows()));
    return basis - graph_blendshapes * (graph_blendshapes.transpose() * basis);
}

Eigen::MatrixXd ocl_project_general(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& graph_blendshapes)
{
    if (basis.rows() != graph_blendshapes.rows())
        throw std::invalid_argument("ocl_project_general: row count mismatch");
    const Eigen::MatrixXd gram = graph_blendshapes.transpose() * graph_blendshapes;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    return basis - graph_blendshapes * ldlt.solve(graph_blendshapes.transpose() * basis);
}

Eigen::VectorXd graph_displacement(const FaceModel& model, const Eigen::VectorXd& alpha)
{
    if (alpha.size() != model.identity_dim())
        throw std::invalid_argument("alpha has " + std::to_string(alpha.size()) + " entries, model expects " +
                                    std::to_string(model.identity_dim()));
    return ocl_project(model.geom_basis, model.graph_blendshapes) * alpha;
}

Eigen::VectorXd assemble_graph(const FaceModel& model, const Eigen::VectorXd& alpha)
{
    return model.mean_graph + graph_displacement(model, alpha);
}

Eigen::VectorXd assemble_vertices(const FaceModel& model, const Eigen::VectorXd& alpha, const Eigen::VectorXd& delta)
{
    if (delta.size() != model.expression_dim())
        throw std::invalid_argument("delta has " + std::to_string(delta.size()) + " entries, model expects " +
                                    std::to_string(model.expression_dim()));
    return model.mean_shape + model.skinning.apply(graph_displacement(model, alpha)) + model.blendshapes * delta;
}

Eigen::VectorXd assemble_appearance(const FaceModel& model, const Eigen::VectorXd& beta)
{
    if (beta.size() != model.appearance_dim())
        throw std::invalid_argument("beta has " + std::to_string(beta.size()) + " entries, model expects " +
                                    std::to_string(model.appearance_dim()));
    return model.appear_mean + model.appear_basis * beta;
}

void rebuild_topology(FaceModel& model)
{
    model.graph.neighborhoods = mesh::graph_neighborhoods(model.skinning, model.graph);
    model.vertex_neighbors = mesh::vertex_adjacency(model.mesh.faces, model.mesh.num_vertices());
}

FaceModel init_model(const mesh::Mesh& mesh, const Blendshapes& blendshapes, const InitOptions& options)
{
    mesh.validate();
    if (blendshapes.basis.rows() != 3 * mesh.num_vertices())
        throw std::invalid_argument("blendshape basis has " + std::to_string(blendshapes.basis.rows()) +
                                    " rows but the mesh has " + std::to_string(mesh.num_vertices()) + " vertices");
    if (blendshapes.sigmas.size() != blendshapes.basis.cols())
        throw std::invalid_argument("blendshape sigma count does not match the basis");
    if (options.identity_dim < 0 || options.appearance_dim < 0)
        throw std::invalid_argument("model dimensions must be nonnegative");

    FaceModel model;
    model.mesh = mesh;
    model.graph = mesh::build_deformation_graph(mesh, options.node_count);
    model.skinning = mesh::build_skinning_matrix(mesh, model.graph, options.skinning_k);
    rebuild_topology(model);

    model.mean_shape = Eigen::Map<const Eigen::VectorXd>(mesh.vertices.data(), 3 * mesh.num_vertices());
    model.mean_graph = Eigen::Map<const Eigen::VectorXd>(model.graph.node_positions.data(), 3 * model.num_nodes());
    model.blendshapes = blendshapes.basis;
    model.expression_sigmas = blendshapes.sigmas;
    model.graph_blendshapes = orthonormalize(fit_graph_blendshapes(blendshapes.basis, model.skinning));

    model.appear_mean.resize(3 * mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v)
        model.appear_mean.segment<3>(3 * v) = options.skin_tone;

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double geometry_scale = 1e-3 * mesh::bounding_box_diagonal(mesh.vertices);
    model.geom_basis.resize(3 * model.num_nodes(), options.identity_dim);
    for (Eigen::Index c = 0; c < model.geom_basis.cols(); ++c)
        for (Eigen::Index r = 0; r < model.geom_basis.rows(); ++r)
            model.geom_basis(r, c) = geometry_scale * normal(rng);
    model.geom_basis = ocl_project(model.geom_basis, model.graph_blendshapes);
    model.appear_basis.resize(3 * mesh.num_vertices(), options.appearance_dim);
    for (Eigen::Index c = 0; c < model.appear_basis.cols(); ++c)
        for (Eigen::Index r = 0; r < model.appear_basis.rows(); ++r)
            model.appear_basis(r, c) = 1e-3 * normal(rng);

    model.validate();
    return model;
}

void save_model(const FaceModel& model, const std::filesystem::path& path)
{
    Archive archive;
    archive.put("mean_shape", model.mean_shape);
    archive.put("mean_graph", model.mean_graph);
    archive.put("geom_basis", model.geom_basis);
    archive.put("appear_mean", model.appear_mean);
    archive.put("appear_basis", model.appear_basis);
    archive.put("blendshapes", model.blendshapes);
    archive.put("graph_blendshapes", model.graph_blendshapes);
    archive.put("expression_sigmas", model.expression_sigmas);
    archive.put_indices("landmark_indices", model.mesh.landmark_vertex_indices);
    archive.put_indices("graph_nodes", model.graph.node_vertices);
    archive.put_indices("faces", Eigen::MatrixXi(model.mesh.faces.transpose()));

    const int nv = model.num_vertices();
    const int k = model.skinning.influences();
    Eigen::MatrixXi nodes(nv, k);
    Eigen::MatrixXd weights(nv, k);
    for (int v = 0; v < nv; ++v)
        for (int i = 0; i < k; ++i)
        {
            nodes(v, i) = model.skinning.nodes(v)[static_cast<std::size_t>(i)];
            weights(v, i) = model.skinning.weights(v)[static_cast<std::size_t>(i)];
        }
    archive.put_indices("skinning_indices", nodes);
    archive.put("skinning_weights", weights);
    archive.save(path);
}

FaceModel load_model(const std::filesystem::path& path)
{
    const Archive archive = Archive::load(path);
    FaceModel model;
    model.mean_shape = archive.vector("mean_shape");
    model.mean_graph = archive.vector("mean_graph");
    model.geom_basis = archive.matrix("geom_basis");
    model.appear_mean = archive.vector("appear_mean");
    model.appear_basis = archive.matrix("appear_basis");
    model.blendshapes = archive.matrix("blendshapes");
    model.graph_blendshapes = archive.matrix("graph_blendshapes");
    model.expression_sigmas = archive.vector("expression_sigmas");

    if (model.mean_shape.size() % 3 != 0 || model.mean_graph.size() % 3 != 0)
        throw std::runtime_error(path.string() + ": mean shape/graph sizes are not multiples of 3");
    const auto nv = static_cast<int>(model.mean_shape.size() / 3);
    model.mesh.vertices = Eigen::Map<const Eigen::Matrix3Xd>(model.mean_shape.data(), 3, nv);
    model.mesh.faces = archive.index_matrix("faces").transpose();
    model.mesh.landmark_vertex_indices = archive.indices("landmark_indices");
    model.mesh.validate();

    model.graph.node_vertices = archive.indices("graph_nodes");
    const auto ng = static_cast<int>(model.graph.node_vertices.size());
    if (model.mean_graph.size() != 3 * ng)
        throw std::runtime_error(path.string() + ": mean_graph does not match graph_nodes");
    model.graph.node_positions = Eigen::Map<const Eigen::Matrix3Xd>(model.mean_graph.data(), 3, ng);

    const Eigen::MatrixXi nodes = archive.index_matrix("skinning_indices");
    const Eigen::MatrixXd weights = archive.matrix("skinning_weights");
    if (nodes.rows() != nv || weights.rows() != nv || nodes.cols() != weights.cols())
        throw std::runtime_error(path.string() + ": skinning arrays do not match the vertex count");
    const auto k = static_cast<int>(nodes.cols());
    std::vector<int> node_list(static_cast<std::size_t>(nv) * static_cast<std::size_t>(k));
    std::vector<double> weight_list(node_list.size());
    for (int v = 0; v < nv; ++v)
        for (int i = 0; i < k; ++i)
        {
            node_list[static_cast<std::size_t>(v * k + i)] = nodes(v, i);
            weight_list[static_cast<std::size_t>(v * k + i)] = weights(v, i);
        }
    model.skinning = mesh::SkinningMatrix(nv, ng, k, std::move(node_list), std::move(weight_list));
    rebuild_topology(model);
    model.validate();
    return model;
}

} // namespace model
} // namespace facelearn
