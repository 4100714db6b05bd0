/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/eval/metrics.cpp
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
#include "facelearn/eval/metrics.hpp"

#include "facelearn/render/camera.hpp"
#include "facelearn/render/renderer.hpp"
#include "facelearn/render/shading.hpp"

#include "Eigen/LU"
#include "Eigen/SVD"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace facelearn {
namespace eval {

namespace {

Eigen::Matrix3Xd as_points(const Eigen::VectorXd& stacked)
{
    if (stacked.size() % 3 != 0)
        throw std::invalid_argument("position vector length " + std::to_string(stacked.size()) +
                                    " is not a multiple of 3");
    return Eigen::Map<const Eigen::Matrix3Xd>(stacked.data(), 3, stacked.size() / 3);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    const double denom = ca.norm() * cb.norm();
    if (denom <= 0.0)
        return 0.0;
    return std::clamp(ca.dot(cb) / denom, -1.0, 1.0);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ','))
        fields.push_back(field);
    return fields;
}

} // namespace

Eigen::Matrix3Xd RigidTransform::apply(const Eigen::Matrix3Xd& points) const
{
    return (rotation * points).colwise() + translation;
}

RigidTransform procrustes_align(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target)
{
    if (source.cols() != target.cols())
        throw std::invalid_argument("procrustes: point counts differ (" + std::to_string(source.cols()) + " vs " +
                                    std::to_string(target.cols()) + ")");
    if (source.cols() < 3)
        throw std::invalid_argument("procrustes: need at least 3 points");
    const Eigen::Vector3d mu_s = source.rowwise().mean();
    const Eigen::Vector3d mu_t = target.rowwise().mean();
    const Eigen::Matrix3d cov = (target.colwise() - mu_t) * (source.colwise() - mu_s).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d s = svd.singularValues();
    if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0))
        throw std::invalid_argument("procrustes: degenerate point configuration (cross-covariance rank < 2)");
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
        d(2, 2) = -1.0;
    RigidTransform out;
    out.rotation = svd.matrixU() * d * svd.matrixV().transpose();
    out.translation = mu_t - out.rotation * mu_s;
    return out;
}

double rmse_unaligned(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("rmse: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    const Eigen::Matrix3Xd pa = as_points(a);
    if (pa.cols() == 0)
        throw std::invalid_argument("rmse: empty point set");
    return std::sqrt((pa - as_points(b)).colwise().squaredNorm().mean());
}

double per_vertex_rmse(const Eigen::VectorXd& reconstruction, const Eigen::VectorXd& ground_truth)
{
    if (reconstruction.size() != ground_truth.size())
        throw std::invalid_argument("rmse: dimension mismatch (" + std::to_string(reconstruction.size()) + " vs " +
                                    std::to_string(ground_truth.size()) + ")");
    const Eigen::Matrix3Xd rec = as_points(reconstruction);
    const Eigen::Matrix3Xd gt = as_points(ground_truth);
    const RigidTransform t = procrustes_align(rec, gt);
    return std::sqrt((t.apply(rec) - gt).colwise().squaredNorm().mean());
}

double bounding_box_diagonal(const Eigen::VectorXd& positions)
{
    const Eigen::Matrix3Xd p = as_points(positions);
    if (p.cols() == 0)
        return 0.0;
    return (p.rowwise().maxCoeff() - p.rowwise().minCoeff()).norm();
}

Disentanglement disentanglement_metrics(const Eigen::VectorXd& recovered_albedo, const Eigen::VectorXd& gt_albedo,
                                        const Eigen::VectorXd& recovered_gamma, const Eigen::VectorXd& gt_gamma,
                                        const Eigen::Matrix3Xd& normals)
{
    return disentanglement_metrics(recovered_albedo, gt_albedo, std::vector<Eigen::VectorXd>{recovered_gamma},
                                   std::vector<Eigen::VectorXd>{gt_gamma}, std::vector<Eigen::Matrix3Xd>{normals});
}

Disentanglement disentanglement_metrics(const Eigen::VectorXd& recovered_albedo, const Eigen::VectorXd& gt_albedo,
                                        const std::vector<Eigen::VectorXd>& recovered_gammas,
                                        const std::vector<Eigen::VectorXd>& gt_gammas,
                                        const std::vector<Eigen::Matrix3Xd>& normals)
{
    if (recovered_albedo.size() != gt_albedo.size())
        throw std::invalid_argument("disentanglement: albedo dimension mismatch");
    if (recovered_gammas.size() != gt_gammas.size() || recovered_gammas.size() != normals.size())
        throw std::invalid_argument("disentanglement: light and normal lists differ in length");
    const Eigen::Matrix3Xd rec = as_points(recovered_albedo);
    const Eigen::Matrix3Xd gt = as_points(gt_albedo);

    Disentanglement out;
    for (int c = 0; c < 3; ++c)
    {
        const Eigen::VectorXd r = rec.row(c).transpose();
        const Eigen::VectorXd g = gt.row(c).transpose();
        const double rr = r.squaredNorm();
        out.albedo_scale(c) = rr > 0.0 ? r.dot(g) / rr : 1.0;
        out.albedo_correlation(c) = pearson(out.albedo_scale(c) * r, g);
    }

    double sum = 0.0;
    long count = 0;
    for (std::size_t f = 0; f < normals.size(); ++f)
    {
        if (recovered_gammas[f].size() != model::num_sh_coefficients ||
            gt_gammas[f].size() != model::num_sh_coefficients)
            throw std::invalid_argument("disentanglement: light vectors must have 27 coefficients");
        for (Eigen::Index i = 0; i < normals[f].cols(); ++i)
        {
            const render::ShBasis h = render::sh_basis(normals[f].col(i));
            const Eigen::Vector3d e_rec = render::irradiance(h, recovered_gammas[f]);
            const Eigen::Vector3d e_gt = render::irradiance(h, gt_gammas[f]);
            for (int c = 0; c < 3; ++c)
            {
                if (e_gt(c) <= 1e-9 || out.albedo_scale(c) == 0.0)
                    continue;
                const double ratio = (e_rec(c) / out.albedo_scale(c)) / e_gt(c) - 1.0;
                sum += ratio * ratio;
                ++count;
            }
        }
    }
    out.shading_ratio_error = count > 0 ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
    return out;
}

double median(std::vector<double> values)
{
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<ConditionSummary> EvalReport::summarize() const
{
    std::vector<ConditionSummary> out;
    for (const EvalRow& row : rows_)
    {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const ConditionSummary& s) { return s.condition == row.condition; });
        if (it == out.end())
        {
            out.push_back(ConditionSummary{});
            out.back().condition = row.condition;
        }
    }
    for (ConditionSummary& s : out)
    {
        std::vector<double> rmse, pct;
        double corr = 0.0, ratio = 0.0;
        for (const EvalRow& row : rows_)
        {
            if (row.condition != s.condition)
                continue;
            rmse.push_back(row.rmse);
            pct.push_back(row.rmse_percent);
            corr += row.albedo_correlation.mean();
            ratio += row.shading_ratio_error;
        }
        s.count = static_cast<int>(rmse.size());
        const auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
            mean = 0.0;
            for (double x : v)
                mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v)
                ss += (x - mean) * (x - mean);
            sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        };
        mean_sd(rmse, s.rmse_mean, s.rmse_sd);
        mean_sd(pct, s.rmse_percent_mean, s.rmse_percent_sd);
        s.rmse_median = median(rmse);
        s.rmse_percent_median = median(pct);
        s.albedo_correlation_mean = corr / s.count;
        s.shading_ratio_error_mean = ratio / s.count;
    }
    return out;
}

void EvalReport::write_csv(const std::filesystem::path& path) const
{
    std::FILE* file = std::fopen(path.string().c_str(), "w");
    if (!file)
        throw std::runtime_error("cannot write " + path.string());
    std::fprintf(file, "subject,condition,rmse,rmse_percent,albedo_corr_r,albedo_corr_g,albedo_corr_b,"
                       "shading_ratio_error\n");
    for (const EvalRow& r : rows_)
    {
        if (r.subject.find(',') != std::string::npos || r.condition.find(',') != std::string::npos)
        {
            std::fclose(file);
            throw std::invalid_argument("eval report: subject and condition must not contain commas");
        }
        std::fprintf(file, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.subject.c_str(), r.condition.c_str(),
                     r.rmse, r.rmse_percent, r.albedo_correlation(0), r.albedo_correlation(1),
                     r.albedo_correlation(2), r.shading_ratio_error);
    }
    if (std::fclose(file) != 0)
        throw std::runtime_error("error writing " + path.string());
}

EvalReport EvalReport::read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    EvalReport report;
    int line_number = 1;
    while (std::getline(in, line))
    {
        ++line_number;
        if (line.empty())
            continue;
        const std::vector<std::string> f = split_csv(line);
        if (f.size() != 8)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": expected 8 fields");
        EvalRow r;
        r.subject = f[0];
        r.condition = f[1];
        try
        {
            r.rmse = std::stod(f[2]);
            r.rmse_percent = std::stod(f[3]);
            r.albedo_correlation = Eigen::Vector3d(std::stod(f[4]), std::stod(f[5]), std::stod(f[6]));
            r.shading_ratio_error = std::stod(f[7]);
        }
        catch (const std::exception&)
        {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": malformed number");
        }
        report.add(std::move(r));
    }
    return report;
}

std::string EvalReport::summary_table() const
{
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-28s %-7s %12s %10s %10s %12s\n", "condition", "stat", "rmse", "rmse_%diag",
                  "albedo_r", "shading_err");
    out += buf;
    for (const ConditionSummary& s : summarize())
    {
        std::snprintf(buf, sizeof buf, "%-28s %-7s %12.6g %10.4f %10.4f %12.6g\n", s.condition.c_str(), "Mean",
                      s.rmse_mean, s.rmse_percent_mean, s.albedo_correlation_mean, s.shading_ratio_error_mean);
        out += buf;
        std::snprintf(buf, sizeof buf, "%-28s %-7s %12.6g %10.4f\n", "", "SD", s.rmse_sd, s.rmse_percent_sd);
        out += buf;
        std::snprintf(buf, sizeof buf, "%-28s %-7s %12.6g %10.4f\n", "", "Median", s.rmse_median,
                      s.rmse_percent_median);
        out += buf;
        std::snprintf(buf, sizeof buf, "%-28s %-7s %12d\n", "", "N", s.count);
        out += buf;
    }
    return out;
}

EvalRow evaluate_sample(const model::FaceModel& gt_model, const data::MultiFrameSample& sample,
                        const model::FaceModel& model, const model::SampleParams& fitted,
                        const std::string& condition)
{
    if (!sample.ground_truth)
        throw std::invalid_argument("evaluate_sample: sample '" + sample.subject + "' has no ground truth");
    if (gt_model.num_vertices() != model.num_vertices())
        throw std::invalid_argument("evaluate_sample: models differ in vertex count");
    const model::SampleParams& gt = sample.ground_truth->params;

    EvalRow row;
    row.subject = sample.subject;
    row.condition = condition;
    const Eigen::VectorXd gt_shape =
        model::assemble_vertices(gt_model, gt.identity.alpha, Eigen::VectorXd::Zero(gt_model.expression_dim()));
    const Eigen::VectorXd rec_shape =
        model::assemble_vertices(model, fitted.identity.alpha, Eigen::VectorXd::Zero(model.expression_dim()));
    row.rmse = per_vertex_rmse(rec_shape, gt_shape);
    row.rmse_percent = 100.0 * row.rmse / bounding_box_diagonal(gt_shape);

    const Eigen::VectorXd gt_albedo = model::assemble_appearance(gt_model, gt.identity.beta);
    const Eigen::VectorXd rec_albedo = model::assemble_appearance(model, fitted.identity.beta);

    // Shading is compared frame by frame where both parameter sets have a frame.
    std::vector<Eigen::VectorXd> rec_gammas, gt_gammas;
    std::vector<Eigen::Matrix3Xd> normals;
    const std::size_t frames = std::min(gt.frames.size(), fitted.frames.size());
    for (std::size_t f = 0; f < frames; ++f)
    {
        const Image& image = sample.frames[f].image;
        const render::CameraIntrinsics intr = render::CameraIntrinsics::for_image(image.width(), image.height());
        const render::RenderedFrame r = render::render_vertices(gt_model, gt.identity, gt.frames[f], intr);
        Eigen::Matrix3Xd n(3, static_cast<Eigen::Index>(r.visible_indices.size()));
        for (std::size_t k = 0; k < r.visible_indices.size(); ++k)
            n.col(static_cast<Eigen::Index>(k)) = r.camera_normals.col(r.visible_indices[k]);
        normals.push_back(std::move(n));
        rec_gammas.push_back(fitted.frames[f].gamma);
        gt_gammas.push_back(gt.frames[f].gamma);
    }
    const Disentanglement d = disentanglement_metrics(rec_albedo, gt_albedo, rec_gammas, gt_gammas, normals);
    row.albedo_correlation = d.albedo_correlation;
    row.shading_ratio_error = d.shading_ratio_error;
    return row;
}

} // namespace eval
} // namespace facelearn
