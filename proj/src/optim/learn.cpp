/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/optim/learn.cpp
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
#include "facelearn/optim/learn.hpp"

#include "facelearn/autodiff/gradient.hpp"
#include "facelearn/core/archive.hpp"
#include "facelearn/optim/fit.hpp"
#include "facelearn/render/camera.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace facelearn {
namespace optim {

using autodiff::BlockKind;

namespace {

void reproject_geometry(autodiff::ParamVector& pv, const model::FaceModel& model)
{
    for (std::size_t id : pv.model_blocks())
    {
        const autodiff::ParamBlock& b = pv.blocks()[id];
        if (b.kind != BlockKind::GeomBasis || !b.active)
            continue;
        const Eigen::Index rows = model.graph_blendshapes.rows();
        const Eigen::MatrixXd basis = Eigen::Map<const Eigen::MatrixXd>(pv.values.data() + b.offset, rows, b.size / rows);
        const Eigen::MatrixXd projected = model::ocl_project(basis, model.graph_blendshapes);
        pv.segment(b) = Eigen::Map<const Eigen::VectorXd>(projected.data(), b.size);
    }
}

void wrap_rotations(autodiff::ParamVector& pv, const std::vector<std::size_t>& ids)
{
    for (std::size_t id : ids)
    {
        const autodiff::ParamBlock& b = pv.blocks()[id];
        if (b.kind == BlockKind::Rotation)
        {
            const Eigen::Vector3d r = pv.segment(b);
            pv.segment(b) = render::wrap_axis_angle(r);
        }
    }
}

std::vector<model::SampleParams> unpack_all(const autodiff::ParamVector& pv)
{
    std::vector<model::SampleParams> out;
    for (int s = 0; s < pv.num_samples(); ++s)
        out.push_back(pv.unpack_sample(s));
    return out;
}

struct TrainerState
{
    OptimizerState optimizer;
    std::mt19937_64 rng;
    int step = 0;
    int next_phase = 0;
};

void write_checkpoint(const autodiff::ParamVector& pv, const model::FaceModel& base, const TrainerState& trainer,
                      const std::filesystem::path& dir, const std::string& stem)
{
    if (dir.empty())
        return;
    std::filesystem::create_directories(dir);
    model::FaceModel m = base;
    pv.unpack_model(m);
    model::save_model(m, dir / (stem + ".model.arc"));
    model::save_param_store(unpack_all(pv), dir / (stem + ".params.arc"));

    Archive archive;
    const OptimizerState& o = trainer.optimizer;
    archive.put("first_moment", o.first_moment);
    archive.put("second_moment", o.second_moment);
    Eigen::VectorXd steps(static_cast<Eigen::Index>(o.block_steps.size()));
    for (std::size_t i = 0; i < o.block_steps.size(); ++i)
        steps(static_cast<Eigen::Index>(i)) = static_cast<double>(o.block_steps[i]);
    archive.put("block_steps", steps);
    archive.put_scalar("optimizer_step", static_cast<double>(o.step));
    archive.put_scalar("step", trainer.step);
    archive.put_scalar("next_phase", trainer.next_phase);
    std::ostringstream rng;
    rng << trainer.rng;
    const std::string text = rng.str();
    Eigen::VectorXd codes(static_cast<Eigen::Index>(text.size()));
    for (std::size_t i = 0; i < text.size(); ++i)
        codes(static_cast<Eigen::Index>(i)) = static_cast<unsigned char>(text[i]);
    archive.put("rng_state", codes);
    archive.save(dir / (stem + ".optim.arc"));
}

void read_checkpoint(const std::filesystem::path& stem, autodiff::ParamVector& pv, const model::FaceModel& base,
                     TrainerState& trainer)
{
    const std::filesystem::path model_path = stem.string() + ".model.arc";
    const std::filesystem::path params_path = stem.string() + ".params.arc";
    const std::filesystem::path optim_path = stem.string() + ".optim.arc";
    const model::FaceModel m = model::load_model(model_path);
    if (m.geom_basis.rows() != base.geom_basis.rows() || m.geom_basis.cols() != base.geom_basis.cols() ||
        m.appear_basis.rows() != base.appear_basis.rows() || m.appear_basis.cols() != base.appear_basis.cols())
        throw std::invalid_argument(model_path.string() + ": model dimensions differ from the initial model");
    pv.store_model(m);
    const std::vector<model::SampleParams> store = model::load_param_store(params_path);
    if (static_cast<int>(store.size()) != pv.num_samples())
        throw std::invalid_argument(params_path.string() + ": parameter store has " + std::to_string(store.size()) +
                                    " samples, dataset has " + std::to_string(pv.num_samples()));
    for (int s = 0; s < pv.num_samples(); ++s)
    {
        const model::SampleParams current = pv.unpack_sample(s);
        const model::SampleParams& loaded = store[static_cast<std::size_t>(s)];
        if (loaded.frames.size() != current.frames.size() ||
            loaded.identity.alpha.size() != current.identity.alpha.size() ||
            loaded.identity.beta.size() != current.identity.beta.size())
            throw std::invalid_argument(params_path.string() + ": sample " + std::to_string(s) +
                                        " does not match the dataset layout");
        pv.store_sample(s, loaded);
    }

    const Archive archive = Archive::load(optim_path);
    OptimizerState& o = trainer.optimizer;
    o.first_moment = archive.vector("first_moment");
    o.second_moment = archive.vector("second_moment");
    const Eigen::VectorXd steps = archive.vector("block_steps");
    if (o.first_moment.size() != pv.values.size() || o.second_moment.size() != pv.values.size() ||
        steps.size() != static_cast<Eigen::Index>(pv.blocks().size()))
        throw std::invalid_argument(optim_path.string() + ": optimizer state does not match the parameter layout");
    for (Eigen::Index i = 0; i < steps.size(); ++i)
        o.block_steps[static_cast<std::size_t>(i)] = static_cast<long>(steps(i));
    o.step = static_cast<long>(archive.scalar("optimizer_step"));
    trainer.step = static_cast<int>(archive.scalar("step"));
    trainer.next_phase = static_cast<int>(archive.scalar("next_phase"));
    const Eigen::VectorXd codes = archive.vector("rng_state");
    std::string text;
    for (Eigen::Index i = 0; i < codes.size(); ++i)
        text.push_back(static_cast<char>(static_cast<int>(codes(i))));
    std::istringstream rng(text);
    rng >> trainer.rng;
    if (!rng)
        throw std::invalid_argument(optim_path.string() + ": unreadable sampler state");
}

} // namespace

void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path)
{
    std::FILE* file = std::fopen(path.string().c_str(), "w");
    if (!file)
        throw std::runtime_error("cannot write training log " + path.string());
    std::fprintf(file, "phase,step,batch_size,pho,lan,smo,spa,ble,total\n");
    for (const LogRow& r : log)
        std::fprintf(file, "%s,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.phase.c_str(), r.step, r.batch_size,
                     r.loss.pho, r.loss.lan, r.loss.smo, r.loss.spa, r.loss.ble, r.loss.total);
    if (std::fclose(file) != 0)
        throw std::runtime_error("error writing training log " + path.string());
}

LearnResult learn_model(const data::Dataset& dataset, const model::FaceModel& initial_model,
                        const LearnOptions& options)
{
    if (dataset.empty())
        throw std::invalid_argument("learn_model: empty dataset");
    options.schedule.validate();
    options.weights.validate();
    options.sparsity.validate();
    initial_model.validate();
    for (const data::MultiFrameSample& s : dataset)
        s.validate();

    std::vector<model::SampleParams> start;
    if (options.initial_params)
    {
        start = *options.initial_params;
        if (start.size() != dataset.size())
            throw std::invalid_argument("learn_model: initial parameter store has " + std::to_string(start.size()) +
                                        " samples, dataset has " + std::to_string(dataset.size()));
    }
    else
    {
        for (const data::MultiFrameSample& s : dataset)
            start.push_back(initial_params(initial_model, s));
    }

    autodiff::Problem problem;
    problem.model = initial_model;
    for (const data::MultiFrameSample& s : dataset)
        problem.samples.push_back(&s);
    problem.weights = options.weights;
    problem.sparsity = options.sparsity;
    problem.threads = options.threads;
    problem.edge_weights.resize(dataset.size());

    autodiff::ParamVector pv = autodiff::ParamVector::pack(initial_model, start, true);
    TrainerState trainer{OptimizerState::for_params(pv, {}), std::mt19937_64(options.seed), 0, 0};
    if (!options.resume_from.empty())
        read_checkpoint(options.resume_from, pv, initial_model, trainer);
    if (trainer.next_phase > static_cast<int>(options.schedule.phases.size()))
        throw std::invalid_argument("learn_model: checkpoint phase is beyond the schedule");
    pv.set_all_active(true);
    if (options.resume_from.empty())
        reproject_geometry(pv, initial_model);
    OptimizerState& state = trainer.optimizer;
    std::mt19937_64& rng = trainer.rng;
    int& step = trainer.step;
    std::vector<int> order(dataset.size());

    LearnResult result;
    const auto abort_with = [&](const std::string& why) {
        write_checkpoint(pv, initial_model, trainer, options.checkpoint_dir, "abort");
        if (!options.log_path.empty())
            write_log_csv(result.log, options.log_path);
        throw std::runtime_error("learn_model: " + why + " at step " + std::to_string(step) +
                                 (options.checkpoint_dir.empty() ? "" : "; checkpoint written"));
    };

    for (std::size_t k = static_cast<std::size_t>(trainer.next_phase); k < options.schedule.phases.size(); ++k)
    {
        const Phase& phase = options.schedule.phases[k];
        pv.set_all_active(false);
        for (BlockKind kind : phase.active)
            pv.set_active(kind, true);
        state.learning_rates = phase.learning_rates;
        const int batch_size = std::min<int>(phase.batch_size, static_cast<int>(dataset.size()));

        std::size_t cursor = order.size();
        for (int it = 0; it < phase.iterations; ++it, ++step)
        {
            if (cursor + static_cast<std::size_t>(batch_size) > order.size())
            {
                std::iota(order.begin(), order.end(), 0);
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
                if (options.weights.spa > 0.0)
                {
                    model::FaceModel current = initial_model;
                    pv.unpack_model(current);
                    for (std::size_t s = 0; s < dataset.size(); ++s)
                        problem.edge_weights[s] = loss::sample_chroma_weights(
                            current, dataset[s], pv.unpack_sample(static_cast<int>(s)), options.sparsity);
                }
            }
            std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                   order.begin() + static_cast<std::ptrdiff_t>(cursor) + batch_size);
            cursor += static_cast<std::size_t>(batch_size);
            std::sort(batch.begin(), batch.end());

            autodiff::Evaluation ev;
            try
            {
                ev = autodiff::evaluate_with_gradient(problem, pv, batch);
            }
            catch (const std::runtime_error& e)
            {
                abort_with(e.what());
            }
            result.log.push_back({phase.name, step, batch_size, ev.loss});
            if (!(ev.loss.total / batch_size <= options.divergence))
                abort_with("loss " + std::to_string(ev.loss.total) + " exceeds the divergence bound");

            std::vector<std::size_t> ids = pv.model_blocks();
            for (int s : batch)
            {
                const auto& sb = pv.sample_blocks(s);
                ids.insert(ids.end(), sb.begin(), sb.end());
            }
            try
            {
                adaptive_step(state, pv, ev.gradient, &ids);
            }
            catch (const std::invalid_argument& e)
            {
                abort_with(e.what());
            }
            reproject_geometry(pv, initial_model);
            wrap_rotations(pv, ids);
            if (!pv.values.allFinite())
                abort_with("non-finite parameter after update");
        }
        trainer.next_phase = static_cast<int>(k) + 1;
        write_checkpoint(pv, initial_model, trainer, options.checkpoint_dir, std::to_string(k + 1) + "-" + phase.name);
    }

    result.model = initial_model;
    pv.unpack_model(result.model);
    result.params = unpack_all(pv);
    pv.set_all_active(true);
    result.final_loss = autodiff::evaluate_loss(problem, pv);
    if (!options.log_path.empty())
        write_log_csv(result.log, options.log_path);
    return result;
}

} // namespace optim
} // namespace facelearn
