/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/data/io.cpp
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
#include "facelearn/data/io.hpp"

#include "facelearn/core/archive.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace facelearn {
namespace data {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, const fs::path& path, int line)
{
    std::size_t used = 0;
    double value = 0.0;
    try
    {
        value = std::stod(text, &used);
    }
    catch (const std::exception&)
    {
        used = 0;
    }
    if (used == 0 || trim(text.substr(used)).size() != 0)
        throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": malformed number '" + text + "'");
    return value;
}

Eigen::VectorXd string_to_codes(const std::string& s)
{
    Eigen::VectorXd codes(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i)
        codes(static_cast<Eigen::Index>(i)) = static_cast<unsigned char>(s[i]);
    return codes;
}

std::string codes_to_string(const Eigen::VectorXd& codes)
{
    std::string s;
    for (Eigen::Index i = 0; i < codes.size(); ++i)
        s.push_back(static_cast<char>(static_cast<int>(codes(i))));
    return s;
}

// Frame names are stored with the parameters so a sample loaded with fewer frames keeps matching ground truth.
Archive ground_truth_archive(const GroundTruth& gt, const std::vector<Frame>& frames)
{
    Archive archive;
    model::put_params(archive, "", gt.params);
    archive.put("model_name", string_to_codes(gt.model_name));
    for (std::size_t k = 0; k < frames.size(); ++k)
        archive.put("f" + std::to_string(k) + "/name", string_to_codes(frames[k].name));
    return archive;
}

GroundTruth ground_truth_from_archive(const Archive& archive, const fs::path& path,
                                      const std::vector<std::string>& frame_names)
{
    GroundTruth gt;
    try
    {
        const model::SampleParams all = model::get_params(archive, "");
        gt.model_name = codes_to_string(archive.vector("model_name"));
        gt.params.identity = all.identity;
        for (const std::string& name : frame_names)
        {
            std::size_t k = 0;
            while (k < all.frames.size() &&
                   codes_to_string(archive.vector("f" + std::to_string(k) + "/name")) != name)
                ++k;
            if (k == all.frames.size())
                throw std::runtime_error("no ground truth for frame '" + name + "'");
            gt.params.frames.push_back(all.frames[k]);
        }
    }
    catch (const std::exception& e)
    {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return gt;
}

Frame load_frame(const fs::path& image_path, const std::string& name)
{
    const fs::path lmk = landmark_path_for(image_path);
    if (!fs::exists(image_path))
        throw std::runtime_error("missing image file " + image_path.string());
    if (!fs::exists(lmk))
        throw std::runtime_error("missing landmark file " + lmk.string());
    Frame frame;
    frame.name = name;
    frame.image = read_image(image_path);
    frame.landmarks = read_landmarks(lmk);
    return frame;
}

struct ManifestEntry
{
    std::string subject;
    std::vector<std::string> paths;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open manifest " + path.string());
    std::vector<ManifestEntry> entries;
    std::set<std::string> subjects;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        const std::string content = trim(line.substr(0, line.find('#')));
        if (content.empty())
            continue;
        std::istringstream tokens(content);
        ManifestEntry entry;
        tokens >> entry.subject;
        std::string p;
        while (tokens >> p)
            entry.paths.push_back(p);
        if (entry.paths.empty())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": subject '" +
                                     entry.subject + "' lists no frames");
        if (!subjects.insert(entry.subject).second)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": subject '" +
                                     entry.subject + "' listed twice");
        std::set<std::string> seen;
        for (const std::string& frame : entry.paths)
        {
            if (!seen.insert(fs::path(frame).lexically_normal().string()).second)
                throw std::runtime_error(path.string() + ":" + std::to_string(line_number) +
                                         ": duplicate frame path '" + frame + "' in subject '" + entry.subject + "'");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

} // namespace

fs::path landmark_path_for(const fs::path& image_path)
{
    fs::path p = image_path;
    p.replace_extension(".lmk.csv");
    return p;
}

LandmarkSet read_landmarks(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open landmark file " + path.string());
    std::string line;
    int line_number = 0;
    bool header_seen = false;
    std::vector<bool> present(66, false);
    int rows = 0;
    LandmarkSet set;
    while (std::getline(in, line))
    {
        ++line_number;
        line = trim(line);
        if (line.empty())
            continue;
        if (!header_seen)
        {
            header_seen = true;
            if (line != "index,x,y,confidence")
                throw std::runtime_error(path.string() + ":" + std::to_string(line_number) +
                                         ": expected header 'index,x,y,confidence'");
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ','))
            fields.push_back(trim(field));
        if (fields.size() != 4)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": expected 4 fields");
        ++rows;
        const double index = parse_double(fields[0], path, line_number);
        const int i = static_cast<int>(index);
        if (index != i || i < 0 || i >= 66)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": landmark index '" +
                                     fields[0] + "' outside 0..65");
        if (present[static_cast<std::size_t>(i)])
            throw std::runtime_error(path.string() + ":" + std::to_string(line_number) + ": landmark " +
                                     std::to_string(i) + " repeated");
        present[static_cast<std::size_t>(i)] = true;
        set.positions(0, i) = parse_double(fields[1], path, line_number);
        set.positions(1, i) = parse_double(fields[2], path, line_number);
        set.confidences(i) = parse_double(fields[3], path, line_number);
    }
    if (rows != 66)
        throw std::runtime_error(path.string() + ": expected 66 landmarks, found " + std::to_string(rows));
    try
    {
        set.validate();
    }
    catch (const std::exception& e)
    {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return set;
}

void write_landmarks(const LandmarkSet& landmarks, const fs::path& path)
{
    landmarks.validate();
    std::FILE* file = std::fopen(path.string().c_str(), "w");
    if (!file)
        throw std::runtime_error("cannot write landmark file " + path.string());
    std::fprintf(file, "index,x,y,confidence\n");
    for (int i = 0; i < landmarks.size(); ++i)
        std::fprintf(file, "%d,%.17g,%.17g,%.17g\n", i, landmarks.positions(0, i), landmarks.positions(1, i),
                     landmarks.confidences(i));
    const bool failed = std::ferror(file) != 0;
    if (std::fclose(file) != 0 || failed)
        throw std::runtime_error("error writing landmark file " + path.string());
}

void save_sample(const MultiFrameSample& sample, const fs::path& dir)
{
    sample.validate();
    fs::create_directories(dir);
    for (const Frame& frame : sample.frames)
    {
        if (frame.name.empty() || frame.name.find('/') != std::string::npos)
            throw std::invalid_argument("frame name '" + frame.name + "' is not a plain file name");
        write_png(frame.image, dir / (frame.name + ".png"));
        write_landmarks(frame.landmarks, dir / (frame.name + ".lmk.csv"));
    }
    const fs::path gt_path = dir / "gt.arc";
    if (sample.ground_truth)
        ground_truth_archive(*sample.ground_truth, sample.frames).save(gt_path);
    else if (fs::exists(gt_path))
        fs::remove(gt_path);
}

MultiFrameSample load_sample(const fs::path& dir, const std::vector<std::string>& frame_names)
{
    if (!fs::is_directory(dir))
        throw std::runtime_error("sample directory " + dir.string() + " does not exist");
    MultiFrameSample sample;
    sample.subject = dir.filename().string();
    for (const std::string& name : frame_names)
        sample.frames.push_back(load_frame(dir / (name + ".png"), name));
    const fs::path gt_path = dir / "gt.arc";
    if (fs::exists(gt_path))
        sample.ground_truth = ground_truth_from_archive(Archive::load(gt_path), gt_path, frame_names);
    try
    {
        sample.validate();
    }
    catch (const std::exception& e)
    {
        throw std::runtime_error(dir.string() + ": " + e.what());
    }
    return sample;
}

MultiFrameSample load_sample(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw std::runtime_error("sample directory " + dir.string() + " does not exist");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            names.push_back(entry.path().stem().string());
    std::sort(names.begin(), names.end());
    if (names.empty())
        throw std::runtime_error("sample directory " + dir.string() + " contains no .png frames");
    return load_sample(dir, names);
}

void save_dataset(const Dataset& dataset, const fs::path& root)
{
    fs::create_directories(root);
    std::set<std::string> subjects;
    std::ofstream manifest(root / "manifest.txt");
    if (!manifest)
        throw std::runtime_error("cannot write " + (root / "manifest.txt").string());
    for (const MultiFrameSample& sample : dataset)
    {
        if (sample.subject.empty() || sample.subject.find_first_of("/ \t") != std::string::npos)
            throw std::invalid_argument("subject id '" + sample.subject + "' is not a plain name");
        if (!subjects.insert(sample.subject).second)
            throw std::invalid_argument("duplicate subject id '" + sample.subject + "'");
        save_sample(sample, root / sample.subject);
        manifest << sample.subject;
        for (const Frame& frame : sample.frames)
            manifest << ' ' << sample.subject << '/' << frame.name << ".png";
        manifest << '\n';
    }
    if (!manifest)
        throw std::runtime_error("error writing " + (root / "manifest.txt").string());
}

Dataset load_dataset(const fs::path& root)
{
    Dataset dataset;
    for (const ManifestEntry& entry : read_manifest(root / "manifest.txt"))
    {
        std::vector<std::string> names;
        for (const std::string& p : entry.paths)
        {
            const fs::path rel(p);
            if (rel.parent_path() != fs::path(entry.subject) || rel.extension() != ".png")
                throw std::runtime_error((root / "manifest.txt").string() + ": frame '" + p +
                                         "' is not of the form " + entry.subject + "/<frame>.png");
            names.push_back(rel.stem().string());
        }
        MultiFrameSample sample = load_sample(root / entry.subject, names);
        sample.subject = entry.subject;
        dataset.push_back(std::move(sample));
    }
    return dataset;
}

Dataset ingest_external(const fs::path& manifest, const IngestOptions& options, IngestReport* report)
{
    if (options.min_frames < 1)
        throw std::invalid_argument("ingest: min_frames must be at least 1");
    const fs::path base = manifest.parent_path();
    const std::vector<ManifestEntry> entries = read_manifest(manifest);
    for (const ManifestEntry& entry : entries)
        for (const std::string& p : entry.paths)
        {
            if (!fs::exists(base / p))
                throw std::runtime_error(manifest.string() + ": missing image file " + (base / p).string());
            if (!fs::exists(landmark_path_for(base / p)))
                throw std::runtime_error(manifest.string() + ": missing landmark file " +
                                         landmark_path_for(base / p).string());
        }

    IngestReport local;
    Dataset dataset;
    for (const ManifestEntry& entry : entries)
    {
        MultiFrameSample sample;
        sample.subject = entry.subject;
        for (const std::string& p : entry.paths)
        {
            Frame frame = load_frame(base / p, fs::path(p).stem().string());
            ++local.frames_read;
            if (frame.landmarks.mean_confidence() < options.min_mean_confidence)
            {
                ++local.frames_dropped;
                continue;
            }
            sample.frames.push_back(std::move(frame));
        }
        if (sample.num_frames() < options.min_frames)
        {
            local.samples_dropped.push_back(entry.subject);
            continue;
        }
        try
        {
            sample.validate();
        }
        catch (const std::exception& e)
        {
            throw std::runtime_error(manifest.string() + ": " + e.what());
        }
        dataset.push_back(std::move(sample));
    }
    if (report)
        *report = local;
    return dataset;
}

} // namespace data
} // namespace facelearn
