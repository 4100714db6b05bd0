/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/core/image.cpp
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
#include "facelearn/core/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

namespace facelearn {

namespace {

std::uint8_t to_byte(double v)
{
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

struct FileCloser
{
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Image::Image(int width, int height, const Eigen::Vector3d& fill) : width_(width), height_(height)
{
    if (width < 0 || height < 0)
        throw std::invalid_argument("image dimensions must be nonnegative");
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3)
    {
        data_[i] = fill.x();
        data_[i + 1] = fill.y();
        data_[i + 2] = fill.z();
    }
}

Eigen::Vector3d Image::pixel(int x, int y) const
{
    const auto i = index(x, y, 0);
    return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set_pixel(int x, int y, const Eigen::Vector3d& rgb)
{
    const auto i = index(x, y, 0);
    data_[i] = rgb.x();
    data_[i + 1] = rgb.y();
    data_[i + 2] = rgb.z();
}

Image quantize_8bit(const Image& image)
{
    Image out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = to_byte(image.at(x, y, c)) / 255.0;
    return out;
}

Image read_png(const std::filesystem::path& path)
{
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file)
        throw std::runtime_error("cannot open image: " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info)
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("malformed PNG: " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const auto color_type = png_get_color_type(png, info);
    const auto bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16)
        png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    std::vector<png_byte> buffer(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] = buffer.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width) * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image image(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                image.at(x, y, c) = rows[static_cast<std::size_t>(y)][x * 3 + c] / 255.0;
    return image;
}

void write_png(const Image& image, const std::filesystem::path& path)
{
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file)
        throw std::runtime_error("cannot open image for writing: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info)
    {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed writing PNG: " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * 3);
    for (int y = 0; y < image.height(); ++y)
    {
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(x * 3 + c)] = to_byte(image.at(x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open image: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P6")
        throw std::runtime_error("not a binary PPM (P6): " + path.string());
    auto read_int = [&]() {
        in >> std::ws;
        while (in.peek() == '#')
        {
            std::string comment;
            std::getline(in, comment);
            in >> std::ws;
        }
        int v = 0;
        in >> v;
        if (!in)
            throw std::runtime_error("malformed PPM header: " + path.string());
        return v;
    };
    const int width = read_int();
    const int height = read_int();
    const int max_value = read_int();
    if (max_value != 255)
        throw std::runtime_error("only 8-bit PPM is supported: " + path.string());
    in.get();
    std::vector<unsigned char> buffer(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (!in)
        throw std::runtime_error("truncated PPM: " + path.string());
    Image image(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                image.at(x, y, c) = buffer[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)] / 255.0;
    return image;
}

void write_ppm(const Image& image, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open image for writing: " + path.string());
    out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c)
                out.put(static_cast<char>(to_byte(image.at(x, y, c))));
}

Image read_image(const std::filesystem::path& path)
{
    if (path.extension() == ".ppm")
        return read_ppm(path);
    if (path.extension() == ".png")
        return read_png(path);
    throw std::invalid_argument("unsupported image extension '" + path.extension().string() + "': " + path.string());
}

void write_image(const Image& image, const std::filesystem::path& path)
{
    if (path.extension() == ".ppm")
        write_ppm(image, path);
    else if (path.extension() == ".png")
        write_png(image, path);
    else
        throw std::invalid_argument("unsupported image extension '" + path.extension().string() + "': " +
                                    path.string());
}

} // namespace facelearn
