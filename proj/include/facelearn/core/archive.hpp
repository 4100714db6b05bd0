/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/core/archive.hpp
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

#include "Eigen/Core"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace facelearn {

/**
 * A container of named, shape-tagged dense arrays, stored on disk as
 * little-endian 64-bit floats behind a versioned header.
 *
 * Arrays are kept in row-major order with an explicit shape. Integer data
 * (indices) is stored as doubles, which is exact for anything below 2^53.
 * See docs/formats.md for the byte layout.
 */
class Archive
{
public:
    static constexpr std::uint32_t format_version = 1;

    struct Array
    {
        std::vector<std::int64_t> shape;
        std::vector<double> data;
    };

    void put(const std::string& name, const Eigen::MatrixXd& matrix);
    void put(const std::string& name, const Eigen::VectorXd& vector);
    void put_indices(const std::string& name, const std::vector<int>& indices);
    void put_indices(const std::string& name, const Eigen::MatrixXi& indices);
    void put_scalar(const std::string& name, double value);
    void put_array(const std::string& name, Array array);

    bool contains(const std::string& name) const;
    const Array& array(const std::string& name) const;

    Eigen::MatrixXd matrix(const std::string& name) const;
    Eigen::VectorXd vector(const std::string& name) const;
    std::vector<int> indices(const std::string& name) const;
    Eigen::MatrixXi index_matrix(const std::string& name) const;
    double scalar(const std::string& name) const;

    std::vector<std::string> names() const;

    void save(const std::filesystem::path& path) const;
    static Archive load(const std::filesystem::path& path);

private:
    std::map<std::string, Array> arrays_;
};

} // namespace facelearn
