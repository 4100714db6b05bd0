/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/data/io.hpp
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

#include <filesystem>
#include <string>
#include <vector>

namespace facelearn {
namespace data {

using Dataset = std::vector<MultiFrameSample>;

/**
 * Landmark CSV: a header line "index,x,y,confidence" followed by exactly 66 rows,
 * each index 0..65 appearing once. Values are written with 17 significant digits.
 */
LandmarkSet read_landmarks(const std::filesystem::path& path);
void write_landmarks(const LandmarkSet& landmarks, const std::filesystem::path& path);

/**
 * Writes <dir>/<frame>.png, <dir>/<frame>.lmk.csv per frame and <dir>/gt.arc when the sample
 * carries ground truth. The directory is created if needed.
 */
void save_sample(const MultiFrameSample& sample, const std::filesystem::path& dir);

/// Loads the listed frames (names without extension) from a sample directory; ground truth is restricted to them.
MultiFrameSample load_sample(const std::filesystem::path& dir, const std::vector<std::string>& frame_names);

/// Loads every <frame>.png of a sample directory in lexicographic order.
MultiFrameSample load_sample(const std::filesystem::path& dir);

/**
 * Writes every sample under <root>/<subject>/ plus <root>/manifest.txt. Each manifest line is
 * "<subject> <subject>/<frame>.png ..." with paths relative to the root.
 */
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

/// Loads a dataset written by save_dataset (or any root with a manifest.txt in that format).
Dataset load_dataset(const std::filesystem::path& root);

struct IngestOptions
{
    double min_mean_confidence = 0.5; ///< Frames below this mean landmark confidence are dropped.
    int min_frames = 4;               ///< Samples left with fewer frames are dropped.
};

struct IngestReport
{
    int frames_read = 0;
    int frames_dropped = 0;
    std::vector<std::string> samples_dropped;
};

/**
 * Groups externally prepared images and landmark files by a manifest. Manifest lines are
 * "<subject> <image> <image> ...", image paths relative to the manifest's directory; the landmark
 * file of "a/b.png" is "a/b.lmk.csv". Blank lines and '#' comments are ignored.
 *
 * Missing files and a frame path repeated within one subject are errors.
 */
Dataset ingest_external(const std::filesystem::path& manifest, const IngestOptions& options = {},
                        IngestReport* report = nullptr);

/// Path of the landmark file that belongs to an image path.
std::filesystem::path landmark_path_for(const std::filesystem::path& image_path);

} // namespace data
} // namespace facelearn
