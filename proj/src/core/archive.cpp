/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/core/archive.cpp
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
#include "facelearn/core/archive.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace facelearn {

namespace {

constexpr char magic[8] = {'F', 'L', 'A', 'R', 'C', 'H', 'V', '\0'};

template <typename T>
T to_little_endian(T value)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        std::memcpy(&value, bytes, sizeof(T));
    }
    return value;
}

template <typename T>
void write_le(std::ostream& out, T value)
{
    value = to_little_endian(value);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        throw std::runtime_error("truncated archive: " + path.string());
    return to_little_endian(value);
}

std::int64_t element_count(const std::vector<std::int64_t>& shape)
{
    std::int64_t n = 1;
    for (auto d : shape)
        n *= d;
    return n;
}

} // namespace

void Archive::put(const std::string& name, const Eigen::MatrixXd& matrix)
{
    Array a;
    a.shape = {matrix.rows(), matrix.cols()};
    a.data.resize(static_cast<std::size_t>(matrix.size()));
    for (Eigen::Index r = 0; r < matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < matrix.cols(); ++c)
            a.data[static_cast<std::size_t>(r * matrix.cols() + c)] = matrix(r, c);
    arrays_[name] = std::move(a);
}

void Archive::put(const std::string& name, const Eigen::VectorXd& vector)
{
    Array a;
    a.shape = {vector.size()};
    a.data.assign(vector.data(), vector.data() + vector.size());
    arrays_[name] = std::move(a);
}

void Archive::put_indices(const std::string& name, const std::vector<int>& indices)
{
    Array a;
    a.shape = {static_cast<std::int64_t>(indices.size())};
    a.data.assign(indices.begin(), indices.end());
    arrays_[name] = std::move(a);
}

void Archive::put_indices(const std::string& name, const Eigen::MatrixXi& indices)
{
    put(name, Eigen::MatrixXd(indices.cast<double>()));
}

void Archive::put_scalar(const std::string& name, double value)
{
    arrays_[name] = Array{{}, {value}};
}

void Archive::put_array(const std::string& name, Array array)
{
    if (element_count(array.shape) != static_cast<std::int64_t>(array.data.size()))
        throw std::invalid_argument("archive array '" + name + "': shape does not match data size");
    arrays_[name] = std::move(array);
}

bool Archive::contains(const std::string& name) const
{
    return arrays_.count(name) > 0;
}

const Archive::Array& Archive::array(const std::string& name) const
{
    auto it = arrays_.find(name);
    if (it == arrays_.end())
        throw std::runtime_error("archive has no array named '" + name + "'");
    return it->second;
}

Eigen::MatrixXd Archive::matrix(const std::string& name) const
{
    const Array& a = array(name);
    Eigen::Index rows = 1, cols = 1;
    if (a.shape.size() == 1)
        rows = a.shape[0];
    else if (a.shape.size() == 2)
    {
        rows = a.shape[0];
        cols = a.shape[1];
    }
    else if (!a.shape.empty())
        throw std::runtime_error("archive array '" + name + "' is not a matrix");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = a.data[static_cast<std::size_t>(r * cols + c)];
    return m;
}

Eigen::VectorXd Archive::vector(const std::string& name) const
{
    const Array& a = array(name);
    if (a.shape.size() != 1)
        throw std::runtime_error("archive array '" + name + "' has rank " + std::to_string(a.shape.size()) +
                                 ", expected a vector");
    return Eigen::Map<const Eigen::VectorXd>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
}

std::vector<int> Archive::indices(const std::string& name) const
{
    const Array& a = array(name);
    std::vector<int> out;
    out.reserve(a.data.size());
    for (double v : a.data)
    {
        if (v != std::floor(v))
            throw std::runtime_error("archive array '" + name + "' holds non-integer values");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

Eigen::MatrixXi Archive::index_matrix(const std::string& name) const
{
    return matrix(name).cast<int>();
}

double Archive::scalar(const std::string& name) const
{
    const Array& a = array(name);
    if (a.data.size() != 1)
        throw std::runtime_error("archive array '" + name + "' is not a scalar");
    return a.data[0];
}

std::vector<std::string> Archive::names() const
{
    std::vector<std::string> out;
    for (const auto& [name, _] : arrays_)
        out.push_back(name);
    return out;
}

void Archive::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open archive for writing: " + path.string());
    out.write(magic, sizeof(magic));
    write_le<std::uint32_t>(out, format_version);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays_.size()));
    for (const auto& [name, a] : arrays_)
    {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
        for (auto d : a.shape)
            write_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
        for (double v : a.data)
            write_le<double>(out, v);
    }
    if (!out)
        throw std::runtime_error("failed writing archive: " + path.string());
}

Archive Archive::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open archive: " + path.string());
    char header[8];
    in.read(header, sizeof(header));
    if (!in || std::memcmp(header, magic, sizeof(magic)) != 0)
        throw std::runtime_error("not a facelearn archive: " + path.string());
    const auto version = read_le<std::uint32_t>(in, path);
    if (version != format_version)
        throw std::runtime_error("unsupported archive version " + std::to_string(version) + ": " + path.string());
    const auto count = read_le<std::uint32_t>(in, path);
    Archive archive;
    for (std::uint32_t i = 0; i < count; ++i)
    {
        const auto name_length = read_le<std::uint32_t>(in, path);
        std::string name(name_length, '\0');
        in.read(name.data(), name_length);
        const auto rank = read_le<std::uint32_t>(in, path);
        Array a;
        for (std::uint32_t r = 0; r < rank; ++r)
            a.shape.push_back(static_cast<std::int64_t>(read_le<std::uint64_t>(in, path)));
        const auto n = element_count(a.shape);
        a.data.resize(static_cast<std::size_t>(n));
        for (auto& v : a.data)
            v = read_le<double>(in, path);
        archive.arrays_[name] = std::move(a);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("trailing bytes after archive contents: " + path.string());
    return archive;
}

} // namespace facelearn
