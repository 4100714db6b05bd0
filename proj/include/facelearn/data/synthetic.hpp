/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/data/synthetic.hpp
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
#include "facelearn/mesh/mesh.hpp"
#include "facelearn/model/face_model.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <vector>

namespace facelearn {
namespace data {

/**
 * Procedural face: an ellipsoidal cap with mild nose, brow, chin and lip
 * relief, built directly in camera convention (y down, facing -z, origin at
 * the ellipsoid center). `uv` holds the 2D layout coordinates in [-1, 1]^2
 * (u to the image right, v downwards) used to place features.
 */
struct FaceTemplate
{
    mesh::Mesh mesh;
    Eigen::Matrix2Xd uv;
};

/// `grid` samples per side of the layout square; about 0.785 grid^2 vertices survive the elliptic mask.
FaceTemplate make_face_template(int grid = 36);

/// Eight smooth expression displacements (jaw, smile, brows, ...) with sigma = `expression_std`.
model::Blendshapes make_toy_blendshapes(const FaceTemplate& face, double expression_std = 0.5);

struct GroundTruthOptions
{
    int node_count = 100;
    int skinning_k = 4;
    int identity_modes = 8;
    int appearance_modes = 4;
    double identity_scale = 1.0;   ///< Multiplies the built-in mode amplitudes.
    double appearance_scale = 1.0;
    std::uint64_t seed = 1000;
};

/**
 * Generator model: structured albedo mean, smooth identity modes on the graph
 * (OCL projected) and appearance modes. The seed only drives init_model.
 */
model::FaceModel make_ground_truth_model(const FaceTemplate& face, const model::Blendshapes& blendshapes,
                                         const GroundTruthOptions& options = {});

struct GeneratorConfig
{
    int subjects = 10;
    int frames = 4;
    int width = 128;
    int height = 128;
    double identity_std = 1.0;   ///< s_alpha
    double appearance_std = 1.0; ///< s_beta
    double expression_std = 0.5; ///< delta ~ N(0, (expression_std * sigma)^2) per blendshape, sigma from the model
    double yaw_range_deg = 45.0; ///< yaw in [-range, range]
    double pitch_std_deg = 4.0;
    double roll_std_deg = 3.0;
    double translation_std = 0.04;
    double depth = 3.2;
    double light_intensity_std = 0.05;
    double light_perturbation = 0.1; ///< std of SH bands 1-8
    double background = 0.5;
    int edge_padding = 2;
    std::uint64_t seed = 0;
    std::string subject_prefix = "subject";
    std::string model_name = "gt_model.arc";

    void validate() const;
};

/// Per-frame yaws (radians) with pairwise separation >= 2 range / M, in random frame order.
std::vector<double> sample_yaws(int frames, double range_rad, std::uint64_t seed);

/// One subject; its RNG is derived from (config.seed, subject index) only.
MultiFrameSample generate_subject(const model::FaceModel& gt_model, const GeneratorConfig& config, int subject);

/// Subjects are generated independently from per-subject seeds, so `threads` does not change the output.
std::vector<MultiFrameSample> generate_synthetic(const model::FaceModel& gt_model, const GeneratorConfig& config,
                                                 int threads = 1);

/// Rasterised frame and landmarks for given parameters; images are quantised to 8 bits.
Frame synthesize_frame(const model::FaceModel& gt_model, const model::IdentityParams& identity,
                       const model::FrameParams& frame, const GeneratorConfig& config);

/// Small gradient-checking instance: model, one synthetic sample and parameters away from its ground truth.
struct ToyInstance
{
    model::FaceModel model;
    MultiFrameSample sample;
    model::SampleParams params;
};

/**
 * 489-vertex face, 60 graph nodes, M = 2 frames at 96x96. The model's mean albedo carries uniform
 * noise of amplitude 0.01 so neighboring albedo differences are well above finite-difference steps,
 * and the parameters are the ground truth plus seeded perturbations of every block.
 */
ToyInstance make_toy_instance(std::uint64_t seed = 0);

} // namespace data
} // namespace facelearn
