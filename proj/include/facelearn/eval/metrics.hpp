/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/eval/metrics.hpp
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

#include "facelearn/data/sample.hpp"
#include "facelearn/model/face_model.hpp"

#include "Eigen/Core"

#include <filesystem>
#include <string>
#include <vector>

namespace facelearn {
namespace eval {

struct RigidTransform
{
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Matrix3Xd apply(const Eigen::Matrix3Xd& points) const;
};

/**
 * Rotation and translation minimising sum |R s_i + t - t_i|^2, no scaling. Uses the SVD of the
 * cross-covariance with a reflection correction.
 *
 * Throws std::invalid_argument for fewer than 3 points, mismatched counts, or a cross-covariance
 * of rank below 2 (colinear or coincident points), where the rotation is not unique.
 */
RigidTransform procrustes_align(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target);

/// Root mean squared vertex distance without alignment. Inputs are stacked 3|V| vectors.
double rmse_unaligned(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Aligns the reconstruction onto the ground truth, then takes the root mean squared vertex distance.
double per_vertex_rmse(const Eigen::VectorXd& reconstruction, const Eigen::VectorXd& ground_truth);

/// Length of the diagonal of the axis-aligned bounding box of a stacked 3|V| vector.
double bounding_box_diagonal(const Eigen::VectorXd& positions);

struct Disentanglement
{
    Eigen::Vector3d albedo_correlation = Eigen::Vector3d::Zero(); ///< Pearson, per channel.
    double shading_ratio_error = 0.0;
    Eigen::Vector3d albedo_scale = Eigen::Vector3d::Ones(); ///< Per-channel least-squares scale applied to the recovery.
};

/**
 * Albedo correlation after a per-channel least-squares scale s_c of the recovered albedo onto the
 * ground truth. The shading ratio error is the RMSE over the given normals and channels of
 * (E_rec / s_c) / E_gt - 1 with E = irradiance(n, gamma), so that an albedo/light pair that only
 * trades a global scale scores zero. Normals with E_gt <= 1e-9 in a channel are skipped.
 */
Disentanglement disentanglement_metrics(const Eigen::VectorXd& recovered_albedo, const Eigen::VectorXd& gt_albedo,
                                        const Eigen::VectorXd& recovered_gamma, const Eigen::VectorXd& gt_gamma,
                                        const Eigen::Matrix3Xd& normals);

/// Same, shading compared over several lights (one per frame), each with its own normals.
Disentanglement disentanglement_metrics(const Eigen::VectorXd& recovered_albedo, const Eigen::VectorXd& gt_albedo,
                                        const std::vector<Eigen::VectorXd>& recovered_gammas,
                                        const std::vector<Eigen::VectorXd>& gt_gammas,
                                        const std::vector<Eigen::Matrix3Xd>& normals);

struct EvalRow
{
    std::string subject;
    std::string condition;
    double rmse = 0.0;
    double rmse_percent = 0.0; ///< RMSE as % of the ground-truth bounding-box diagonal.
    Eigen::Vector3d albedo_correlation = Eigen::Vector3d::Zero();
    double shading_ratio_error = 0.0;
};

struct ConditionSummary
{
    std::string condition;
    int count = 0;
    double rmse_mean = 0.0;
    double rmse_sd = 0.0;
    double rmse_median = 0.0;
    double rmse_percent_mean = 0.0;
    double rmse_percent_sd = 0.0;
    double rmse_percent_median = 0.0;
    double albedo_correlation_mean = 0.0;
    double shading_ratio_error_mean = 0.0;
};

class EvalReport
{
public:
    void add(EvalRow row) { rows_.push_back(std::move(row)); }
    const std::vector<EvalRow>& rows() const { return rows_; }

    /// Conditions in first-seen order. SD is the sample standard deviation (0 for one row).
    std::vector<ConditionSummary> summarize() const;

    void write_csv(const std::filesystem::path& path) const;
    static EvalReport read_csv(const std::filesystem::path& path);

    /// Plain-text table, one block of Mean / SD / Median rows per condition.
    std::string summary_table() const;

private:
    std::vector<EvalRow> rows_;
};

/**
 * Compares a fitted sample against its synthetic ground truth. Geometry is the neutral identity
 * shape (expression zero) of each model; albedo is compared over all vertices and shading over
 * the ground-truth visible vertices of every frame.
 */
EvalRow evaluate_sample(const model::FaceModel& gt_model, const data::MultiFrameSample& sample,
                        const model::FaceModel& model, const model::SampleParams& fitted,
                        const std::string& condition);

/// Middle value (mean of the two middle values for an even count); 0 for an empty list.
double median(std::vector<double> values);

} // namespace eval
} // namespace facelearn
