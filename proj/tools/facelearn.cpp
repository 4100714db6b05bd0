/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: tools/facelearn.cpp
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
// Command-line front end: synthetic data, model learning, fitting, rendering and evaluation.

#include "facelearn/autodiff/gradient.hpp"
#include "facelearn/core/config.hpp"
#include "facelearn/data/io.hpp"
#include "facelearn/data/synthetic.hpp"
#include "facelearn/eval/metrics.hpp"
#include "facelearn/optim/fit.hpp"
#include "facelearn/optim/learn.hpp"
#include "facelearn/render/camera.hpp"
#include "facelearn/render/renderer.hpp"
#include "facelearn/render/shading.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace facelearn;

namespace {

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct Globals
{
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    bool deterministic = false;
};

KeyValueConfig load_config(const Globals& g)
{
    if (g.config_path.empty())
        return {};
    if (!fs::exists(g.config_path))
        throw UsageError("config file " + g.config_path + " does not exist");
    return KeyValueConfig::load(g.config_path);
}

loss::LossWeights weights_from(const KeyValueConfig& c)
{
    loss::LossWeights w;
    w.pho = c.get("weights.pho", w.pho);
    w.lan = c.get("weights.lan", w.lan);
    w.smo = c.get("weights.smo", w.smo);
    w.spa = c.get("weights.spa", w.spa);
    w.ble = c.get("weights.ble", w.ble);
    w.normalize = c.get("weights.normalize", w.normalize);
    w.validate();
    return w;
}

loss::SparsityConfig sparsity_from(const KeyValueConfig& c)
{
    loss::SparsityConfig s;
    s.eta = c.get("sparsity.eta", s.eta);
    s.p = c.get("sparsity.p", s.p);
    s.eps_chroma = c.get("sparsity.eps_chroma", s.eps_chroma);
    s.eps_norm = c.get("sparsity.eps_norm", s.eps_norm);
    s.validate();
    return s;
}

optim::FitOptions fit_options_from(const KeyValueConfig& c)
{
    optim::FitOptions o;
    o.weights = weights_from(c);
    o.sparsity = sparsity_from(c);
    o.tolerance = c.get("fit.tolerance", o.tolerance);
    o.window = c.get("fit.window", o.window);
    o.divergence = c.get("fit.divergence", o.divergence);
    o.schedule.apply_config(c, "fit.");
    return o;
}


void require_dir(const fs::path& dir)
{
    fs::create_directories(dir);
}

fs::path gt_model_path(const fs::path& dataset_root, const data::Dataset& dataset)
{
    for (const data::MultiFrameSample& s : dataset)
        if (s.ground_truth)
            return dataset_root / s.ground_truth->model_name;
    return {};
}

void write_trace(const std::vector<loss::LossBreakdown>& trace, const fs::path& path)
{
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    std::fprintf(f, "iteration,pho,lan,smo,spa,ble,total\n");
    for (std::size_t i = 0; i < trace.size(); ++i)
        std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, trace[i].pho, trace[i].lan, trace[i].smo,
                     trace[i].spa, trace[i].ble, trace[i].total);
    if (std::fclose(f) != 0)
        throw std::runtime_error("error writing " + path.string());
}

/// Frontal view of the mean face at the generator's default depth, optionally yawed.
model::FrameParams default_view(const model::FaceModel& m, double yaw_deg)
{
    const Eigen::Map<const Eigen::Matrix3Xd> v(m.mean_shape.data(), 3, m.num_vertices());
    const Eigen::Vector3d center = 0.5 * (v.rowwise().minCoeff() + v.rowwise().maxCoeff());
    model::FrameParams f;
    f.rotation = Eigen::Vector3d(0.0, yaw_deg * 3.14159265358979323846 / 180.0, 0.0);
    f.translation =
        Eigen::Vector3d(0.0, 0.0, data::GeneratorConfig{}.depth) - render::rotation_matrix(f.rotation) * center;
    f.gamma = model::ambient_light(1.0);
    f.delta = Eigen::VectorXd::Zero(m.expression_dim());
    return f;
}

/// Geometry, albedo and lit passes of one view; overlay on `photo` when given.
void render_passes(const model::FaceModel& m, const model::IdentityParams& id, const model::FrameParams& frame,
                   int width, int height, const fs::path& out, const std::string& stem, const Image* photo)
{
    const render::CameraIntrinsics intr = render::CameraIntrinsics::for_image(width, height);
    const render::RenderedFrame r = render::render_vertices(m, id, frame, intr);
    const Image background(width, height, Eigen::Vector3d::Constant(data::GeneratorConfig{}.background));

    // Gray material under a soft key light from the upper front.
    Eigen::VectorXd key = Eigen::VectorXd::Zero(model::num_sh_coefficients);
    for (int c = 0; c < 3; ++c)
    {
        key(c) = 0.6;
        key(3 + c) = -0.15;
        key(6 + c) = -0.35;
        key(9 + c) = 0.1;
    }
    Eigen::Matrix3Xd geometry(3, r.num_vertices());
    for (int i = 0; i < r.num_vertices(); ++i)
        geometry.col(i) = 0.8 * render::irradiance(render::sh_basis(r.camera_normals.col(i)), key);
    const Eigen::VectorXd albedo = model::assemble_appearance(m, id.beta);
    const Eigen::Map<const Eigen::Matrix3Xd> albedo_cols(albedo.data(), 3, m.num_vertices());

    write_png(render::rasterize_preview(r, geometry, m.mesh.faces, background), out / (stem + "geometry.png"));
    write_png(render::rasterize_preview(r, Eigen::Matrix3Xd(albedo_cols), m.mesh.faces, background),
              out / (stem + "albedo.png"));
    write_png(render::rasterize_preview(r, m.mesh.faces, background), out / (stem + "lit.png"));
    if (photo)
        write_png(render::rasterize_preview(r, m.mesh.faces, *photo), out / (stem + "overlay.png"));
}

// ---------------------------------------------------------------------------

int cmd_synth_model(const Globals& g, const fs::path& out, int grid, data::GroundTruthOptions options)
{
    KeyValueConfig c = load_config(g);
    grid = c.get("synth.grid", grid);
    options.node_count = c.get("synth.node_count", options.node_count);
    options.skinning_k = c.get("synth.skinning_k", options.skinning_k);
    options.identity_modes = c.get("synth.identity_modes", options.identity_modes);
    options.appearance_modes = c.get("synth.appearance_modes", options.appearance_modes);
    options.identity_scale = c.get("synth.identity_scale", options.identity_scale);
    options.appearance_scale = c.get("synth.appearance_scale", options.appearance_scale);
    c.reject_unknown();
    options.seed = g.seed + 1000;
    const data::FaceTemplate face = data::make_face_template(grid);
    const model::FaceModel m = data::make_ground_truth_model(face, data::make_toy_blendshapes(face), options);
    require_dir(out);
    model::save_model(m, out / "gt_model.arc");
    std::printf("wrote %s (%d vertices, %d nodes, %d identity modes)\n", (out / "gt_model.arc").c_str(),
                m.num_vertices(), m.num_nodes(), m.identity_dim());
    return 0;
}

int cmd_generate(const Globals& g, const fs::path& model_path, const fs::path& out, data::GeneratorConfig config)
{
    if (!fs::exists(model_path))
        throw UsageError("ground-truth model " + model_path.string() + " does not exist");
    KeyValueConfig c = load_config(g);
    config.identity_std = c.get("generator.identity_std", config.identity_std);
    config.appearance_std = c.get("generator.appearance_std", config.appearance_std);
    config.expression_std = c.get("generator.expression_std", config.expression_std);
    config.pitch_std_deg = c.get("generator.pitch_std_deg", config.pitch_std_deg);
    config.roll_std_deg = c.get("generator.roll_std_deg", config.roll_std_deg);
    config.translation_std = c.get("generator.translation_std", config.translation_std);
    config.depth = c.get("generator.depth", config.depth);
    config.light_intensity_std = c.get("generator.light_intensity_std", config.light_intensity_std);
    config.light_perturbation = c.get("generator.light_perturbation", config.light_perturbation);
    config.background = c.get("generator.background", config.background);
    config.edge_padding = c.get("generator.edge_padding", config.edge_padding);
    c.reject_unknown();
    config.seed = g.seed;
    config.validate();

    const model::FaceModel m = model::load_model(model_path);
    const data::Dataset dataset = data::generate_synthetic(m, config, g.threads);
    require_dir(out);
    data::save_dataset(dataset, out);
    model::save_model(m, out / config.model_name);
    std::printf("wrote %d subjects x %d frames to %s\n", config.subjects, config.frames, out.c_str());
    return 0;
}

int cmd_learn(const Globals& g, const fs::path& dataset_root, const fs::path& out, const fs::path& init_model_path,
              const fs::path& model_path, const fs::path& resume, bool split_frames)
{
    if (init_model_path.empty() == model_path.empty())
        throw UsageError("learn needs exactly one of --init-model or --model");
    KeyValueConfig c = load_config(g);
    optim::LearnOptions options;
    options.weights = weights_from(c);
    options.sparsity = sparsity_from(c);
    options.divergence = c.get("learn.divergence", options.divergence);
    options.schedule.apply_config(c, "learn.");
    model::InitOptions init;
    init.identity_dim = c.get("model.identity_dim", init.identity_dim);
    init.appearance_dim = c.get("model.appearance_dim", init.appearance_dim);
    init.node_count = c.get("model.node_count", init.node_count);
    init.skinning_k = c.get("model.skinning_k", init.skinning_k);
    c.reject_unknown();

    data::Dataset dataset = data::load_dataset(dataset_root);
    if (split_frames)
    {
        data::Dataset single;
        for (const data::MultiFrameSample& s : dataset)
            for (int k = 0; k < s.num_frames(); ++k)
            {
                data::MultiFrameSample one = s.subset({k});
                one.subject += "_" + s.frames[static_cast<std::size_t>(k)].name;
                single.push_back(std::move(one));
            }
        dataset = std::move(single);
    }

    model::FaceModel start;
    if (!init_model_path.empty())
    {
        const model::FaceModel source = model::load_model(init_model_path);
        init.seed = g.seed;
        start = model::init_model(source.mesh, {source.blendshapes, source.expression_sigmas}, init);
    }
    else
    {
        start = model::load_model(model_path);
    }

    require_dir(out);
    options.seed = g.seed;
    options.threads = g.threads;
    options.checkpoint_dir = out / "checkpoints";
    options.log_path = out / "train_log.csv";
    options.resume_from = resume;
    const optim::LearnResult result = optim::learn_model(dataset, start, options);
    model::save_model(result.model, out / "model.arc");
    model::save_param_store(result.params, out / "params.arc");
    if (!result.log.empty())
        std::printf("first batch loss %.6g (per sample %.6g), last batch loss %.6g (per sample %.6g)\n",
                    result.log.front().loss.total, result.log.front().loss.total / result.log.front().batch_size,
                    result.log.back().loss.total, result.log.back().loss.total / result.log.back().batch_size);
    std::printf("final dataset loss %.6g over %zu samples; wrote %s\n", result.final_loss.total, dataset.size(),
                (out / "model.arc").c_str());
    return 0;
}

int cmd_fit(const Globals& g, const fs::path& model_path, const fs::path& dataset_root, const fs::path& out,
            const std::string& subject, int frames)
{
    KeyValueConfig c = load_config(g);
    const optim::FitOptions options = fit_options_from(c);
    c.reject_unknown();

    const model::FaceModel m = model::load_model(model_path);
    data::Dataset dataset = data::load_dataset(dataset_root);
    if (!subject.empty())
    {
        data::Dataset chosen;
        for (data::MultiFrameSample& s : dataset)
            if (s.subject == subject)
                chosen.push_back(std::move(s));
        if (chosen.empty())
            throw UsageError("subject '" + subject + "' is not in " + dataset_root.string());
        dataset = std::move(chosen);
    }

    std::optional<model::FaceModel> gt_model;
    const fs::path gt_path = gt_model_path(dataset_root, dataset);
    if (!gt_path.empty() && fs::exists(gt_path))
    {
        gt_model = model::load_model(gt_path);
        if (gt_model->num_vertices() != m.num_vertices())
            throw std::invalid_argument("model has " + std::to_string(m.num_vertices()) +
                                        " vertices but the ground-truth model has " +
                                        std::to_string(gt_model->num_vertices()));
    }

    require_dir(out);
    std::vector<model::SampleParams> store;
    eval::EvalReport report;
    std::FILE* metrics = std::fopen((out / "fit_metrics.csv").c_str(), "w");
    if (!metrics)
        throw std::runtime_error("cannot write " + (out / "fit_metrics.csv").string());
    std::fprintf(metrics, "subject,frames,iterations,converged,pho,lan,smo,spa,ble,total,rmse,rmse_percent,"
                          "albedo_corr_mean,shading_ratio_error\n");
    for (data::MultiFrameSample& full : dataset)
    {
        std::vector<int> keep;
        const int m_frames = frames > 0 ? std::min(frames, full.num_frames()) : full.num_frames();
        for (int k = 0; k < m_frames; ++k)
            keep.push_back(k);
        const data::MultiFrameSample sample = full.subset(keep);
        const optim::FitResult fit = optim::fit_sample(m, sample, options);
        store.push_back(fit.params);
        model::SampleParams one = fit.params;
        model::save_param_store({one}, out / (sample.subject + ".params.arc"));
        write_trace(fit.trace, out / (sample.subject + "_trace.csv"));
        for (int k = 0; k < sample.num_frames(); ++k)
        {
            const data::Frame& frame = sample.frames[static_cast<std::size_t>(k)];
            const render::RenderedFrame r = render::render_vertices(
                m, fit.params.identity, fit.params.frames[static_cast<std::size_t>(k)],
                render::CameraIntrinsics::for_image(frame.image.width(), frame.image.height()));
            write_png(render::rasterize_preview(r, m.mesh.faces, frame.image),
                      out / (sample.subject + "_" + frame.name + "_overlay.png"));
        }
        const loss::LossBreakdown& l = fit.trace.back();
        std::fprintf(metrics, "%s,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", sample.subject.c_str(),
                     sample.num_frames(), fit.iterations, fit.converged ? 1 : 0, l.pho, l.lan, l.smo, l.spa, l.ble,
                     l.total);
        if (gt_model && sample.ground_truth)
        {
            const eval::EvalRow row =
                eval::evaluate_sample(*gt_model, sample, m, fit.params, "fit M=" + std::to_string(m_frames));
            report.add(row);
            std::fprintf(metrics, ",%.17g,%.17g,%.17g,%.17g\n", row.rmse, row.rmse_percent,
                         row.albedo_correlation.mean(), row.shading_ratio_error);
            std::printf("%s: %d frames, loss %.6g, rmse %.4g%% of bbox diagonal\n", sample.subject.c_str(),
                        sample.num_frames(), l.total, row.rmse_percent);
        }
        else
        {
            std::fprintf(metrics, ",,,,\n");
            std::printf("%s: %d frames, loss %.6g\n", sample.subject.c_str(), sample.num_frames(), l.total);
        }
    }
    std::fclose(metrics);
    model::save_param_store(store, out / "params.arc");
    if (!report.rows().empty())
    {
        report.write_csv(out / "eval.csv");
        std::cout << report.summary_table();
    }
    return 0;
}

int cmd_render(const Globals& g, const fs::path& model_path, const fs::path& out, const fs::path& params_path,
               int sample_index, const fs::path& dataset_root, int width, int height, double yaw)
{
    KeyValueConfig c = load_config(g);
    c.reject_unknown();
    const model::FaceModel m = model::load_model(model_path);
    require_dir(out);
    if (params_path.empty())
    {
        const model::IdentityParams id{Eigen::VectorXd::Zero(m.identity_dim()),
                                       Eigen::VectorXd::Zero(m.appearance_dim())};
        render_passes(m, id, default_view(m, yaw), width, height, out, "", nullptr);
        return 0;
    }
    const std::vector<model::SampleParams> store = model::load_param_store(params_path);
    if (sample_index < 0 || sample_index >= static_cast<int>(store.size()))
        throw UsageError("sample index " + std::to_string(sample_index) + " outside the parameter store (" +
                         std::to_string(store.size()) + " samples)");
    const model::SampleParams& p = store[static_cast<std::size_t>(sample_index)];
    std::optional<data::MultiFrameSample> sample;
    if (!dataset_root.empty())
    {
        data::Dataset dataset = data::load_dataset(dataset_root);
        if (sample_index >= static_cast<int>(dataset.size()))
            throw UsageError("sample index " + std::to_string(sample_index) + " outside the dataset");
        sample = dataset[static_cast<std::size_t>(sample_index)];
    }
    for (std::size_t k = 0; k < p.frames.size(); ++k)
    {
        const Image* photo = sample && k < sample->frames.size() ? &sample->frames[k].image : nullptr;
        const int w = photo ? photo->width() : width;
        const int h = photo ? photo->height() : height;
        render_passes(m, p.identity, p.frames[k], w, h, out, "f" + std::to_string(k) + "_", photo);
    }
    return 0;
}

int cmd_gradcheck(const Globals& g, double step, double tolerance, int max_coordinates)
{
    KeyValueConfig c = load_config(g);
    c.reject_unknown();
    const data::ToyInstance toy = data::make_toy_instance(g.seed);
    std::printf("toy instance: %d vertices, %d nodes, %d frames\n", toy.model.num_vertices(), toy.model.num_nodes(),
                toy.sample.num_frames());
    const char* names[] = {"pho", "lan", "smo", "spa", "ble"};
    bool all = true;
    for (int term = 0; term < 5; ++term)
    {
        autodiff::Problem problem;
        problem.model = toy.model;
        problem.samples = {&toy.sample};
        problem.threads = g.threads;
        loss::LossWeights w;
        double* slots[] = {&w.pho, &w.lan, &w.smo, &w.spa, &w.ble};
        for (double* s : slots)
            *s = 0.0;
        *slots[term] = 1.0;
        problem.weights = w;
        problem.edge_weights = {loss::sample_chroma_weights(toy.model, toy.sample, toy.params, problem.sparsity)};
        const autodiff::ParamVector pv = autodiff::ParamVector::pack(toy.model, {toy.params}, true);
        for (const autodiff::ParamBlock& b : pv.blocks())
        {
            const autodiff::FdReport r =
                autodiff::finite_difference_check(problem, pv, b.name, step, tolerance, max_coordinates);
            all = all && r.passed;
            std::printf("%-4s %-20s checked %4zu skipped %3d max rel err %.3e %s\n", names[term], b.name.c_str(),
                        r.coordinates.size() - static_cast<std::size_t>(r.num_skipped), r.num_skipped,
                        r.max_rel_error, r.passed ? "ok" : "FAIL");
        }
    }
    std::printf("%s\n", all ? "all blocks pass" : "gradient check FAILED");
    return all ? 0 : 1;
}

int cmd_eval(const Globals& g, const fs::path& model_path, const fs::path& dataset_root, const fs::path& params_path,
             const fs::path& gt_model_override, const std::string& condition, const fs::path& out)
{
    KeyValueConfig c = load_config(g);
    c.reject_unknown();
    const model::FaceModel m = model::load_model(model_path);
    const data::Dataset dataset = data::load_dataset(dataset_root);
    const std::vector<model::SampleParams> store = model::load_param_store(params_path);
    if (store.size() != dataset.size())
        throw std::invalid_argument("parameter store has " + std::to_string(store.size()) + " samples, dataset has " +
                                    std::to_string(dataset.size()));
    for (const data::MultiFrameSample& s : dataset)
        if (!s.ground_truth)
            throw std::runtime_error("sample '" + s.subject + "' has no ground truth; eval needs synthetic data");
    const fs::path gt_path = gt_model_override.empty() ? gt_model_path(dataset_root, dataset) : gt_model_override;
    if (!fs::exists(gt_path))
        throw std::runtime_error("ground-truth model " + gt_path.string() + " does not exist");
    const model::FaceModel gt = model::load_model(gt_path);

    eval::EvalReport report;
    for (std::size_t s = 0; s < dataset.size(); ++s)
    {
        const std::size_t frames = std::min(store[s].frames.size(), dataset[s].frames.size());
        std::vector<int> keep;
        for (std::size_t k = 0; k < frames; ++k)
            keep.push_back(static_cast<int>(k));
        report.add(eval::evaluate_sample(gt, dataset[s].subset(keep), m, store[s], condition));
    }
    require_dir(out);
    report.write_csv(out / "eval.csv");
    const std::string table = report.summary_table();
    std::FILE* f = std::fopen((out / "summary.txt").c_str(), "w");
    if (!f)
        throw std::runtime_error("cannot write " + (out / "summary.txt").string());
    std::fputs(table.c_str(), f);
    std::fclose(f);
    std::cout << table;
    return 0;
}

int cmd_ingest(const Globals& g, const fs::path& manifest, const fs::path& out, double min_confidence,
               int min_frames)
{
    KeyValueConfig c = load_config(g);
    c.reject_unknown();
    if (!fs::exists(manifest))
        throw UsageError("manifest " + manifest.string() + " does not exist");
    data::IngestOptions options;
    options.min_mean_confidence = min_confidence;
    options.min_frames = min_frames;
    data::IngestReport report;
    const data::Dataset dataset = data::ingest_external(manifest, options, &report);
    data::save_dataset(dataset, out);
    std::printf("read %d frames, dropped %d low-confidence frames and %zu samples; wrote %zu samples to %s\n",
                report.frames_read, report.frames_dropped, report.samples_dropped.size(), dataset.size(),
                out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"facelearn: multi-frame face model learning by inverse rendering"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "Key/value config file");
    app.add_option("--seed", g.seed, "Random seed")->default_val(0);
    app.add_option("--threads", g.threads, "Worker threads for per-sample evaluation")
        ->default_val(1)
        ->check(CLI::PositiveNumber);
    app.add_flag("--deterministic", g.deterministic,
                 "Ordered reductions (always on; accepted for reproducible command lines)");

    std::string out, model, dataset, init_model, resume, params, gt_model, subject, condition = "eval", manifest;
    int grid = 36, frames = 0, sample_index = 0, width = 128, height = 128, max_coords = 200, min_frames = 4;
    double yaw = 0.0, step = 1e-5, tol = 1e-4, min_conf = 0.5;
    bool split = false;
    data::GroundTruthOptions gt_options;
    data::GeneratorConfig gen;

    auto* synth = app.add_subcommand("synth-model", "Build the analytic ground-truth generator model");
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--grid", grid, "Template grid resolution")->default_val(36);
    synth->add_option("--nodes", gt_options.node_count, "Deformation graph nodes")->default_val(100);
    synth->add_option("--identity-modes", gt_options.identity_modes)->default_val(8);
    synth->add_option("--appearance-modes", gt_options.appearance_modes)->default_val(4);

    auto* generate = app.add_subcommand("generate", "Render a synthetic multi-frame dataset");
    generate->add_option("--model", model, "Ground-truth model archive")->required();
    generate->add_option("--out", out, "Dataset directory")->required();
    generate->add_option("--subjects", gen.subjects)->default_val(10);
    generate->add_option("--frames", gen.frames)->default_val(4);
    generate->add_option("--width", gen.width)->default_val(128);
    generate->add_option("--height", gen.height)->default_val(128);
    generate->add_option("--yaw-range", gen.yaw_range_deg, "Yaw range in degrees (+/-)")->default_val(45.0);

    auto* learn = app.add_subcommand("learn", "Learn a face model from a dataset");
    learn->add_option("--dataset", dataset)->required();
    learn->add_option("--out", out)->required();
    learn->add_option("--init-model", init_model, "Take mesh and blendshapes from this model, fresh learnable blocks");
    learn->add_option("--model", model, "Continue from this model as is");
    learn->add_option("--resume", resume, "Checkpoint stem, e.g. out/checkpoints/1-warmup");
    learn->add_flag("--split-frames", split, "Train on every frame as its own single-frame sample");

    auto* fit = app.add_subcommand("fit", "Fit identity and per-frame parameters with a frozen model");
    fit->add_option("--model", model)->required();
    fit->add_option("--dataset", dataset)->required();
    fit->add_option("--out", out)->required();
    fit->add_option("--subject", subject, "Only this subject");
    fit->add_option("--frames", frames, "Use the first m frames of each sample (0: all)")->default_val(0);

    auto* render_cmd = app.add_subcommand("render", "Render geometry, albedo and lit passes");
    render_cmd->add_option("--model", model)->required();
    render_cmd->add_option("--out", out)->required();
    render_cmd->add_option("--params", params, "Parameter store (default: mean face, frontal)");
    render_cmd->add_option("--sample-index", sample_index)->default_val(0);
    render_cmd->add_option("--dataset", dataset, "Dataset for overlays");
    render_cmd->add_option("--width", width)->default_val(128);
    render_cmd->add_option("--height", height)->default_val(128);
    render_cmd->add_option("--yaw", yaw, "Yaw of the default view in degrees")->default_val(0.0);

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every term and block");
    gradcheck->add_option("--step", step)->default_val(1e-5);
    gradcheck->add_option("--tol", tol)->default_val(1e-4);
    gradcheck->add_option("--max-coords", max_coords, "Coordinates per block (0: all)")->default_val(200);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate fitted parameters against synthetic ground truth");
    eval_cmd->add_option("--model", model)->required();
    eval_cmd->add_option("--dataset", dataset)->required();
    eval_cmd->add_option("--params", params)->required();
    eval_cmd->add_option("--gt-model", gt_model, "Default: the model named by the dataset's ground truth");
    eval_cmd->add_option("--condition", condition)->default_val("eval");
    eval_cmd->add_option("--out", out)->required();

    auto* ingest = app.add_subcommand("ingest", "Import external images and landmark files");
    ingest->add_option("--manifest", manifest)->required();
    ingest->add_option("--out", out)->required();
    ingest->add_option("--min-confidence", min_conf)->default_val(0.5);
    ingest->add_option("--min-frames", min_frames)->default_val(4);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        if (synth->parsed())
            return cmd_synth_model(g, out, grid, gt_options);
        if (generate->parsed())
            return cmd_generate(g, model, out, gen);
        if (learn->parsed())
            return cmd_learn(g, dataset, out, init_model, model, resume, split);
        if (fit->parsed())
            return cmd_fit(g, model, dataset, out, subject, frames);
        if (render_cmd->parsed())
            return cmd_render(g, model, out, params, sample_index, dataset, width, height, yaw);
        if (gradcheck->parsed())
            return cmd_gradcheck(g, step, tol, max_coords);
        if (eval_cmd->parsed())
            return cmd_eval(g, model, dataset, params, gt_model, condition, out);
        if (ingest->parsed())
            return cmd_ingest(g, manifest, out, min_conf, min_frames);
    }
    catch (const ConfigError& e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    catch (const UsageError& e)
    {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
