/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/core/image.hpp
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

#include <filesystem>
#include <vector>

namespace facelearn {

/**
 * Linear RGB image, row-major, origin at the top-left corner.
 *
 * Pixel (x, y) covers [x, x+1) x [y, y+1) in continuous screen coordinates,
 * so its center sits at (x + 0.5, y + 0.5). No gamma transform is applied on
 * load or save; values are clamped to [0, 1] only when written to disk.
 */
class Image
{
public:
    Image() = default;
    Image(int width, int height, const Eigen::Vector3d& fill = Eigen::Vector3d::Zero());

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return width_ == 0 || height_ == 0; }

    double& at(int x, int y, int channel) { return data_[index(x, y, channel)]; }
    double at(int x, int y, int channel) const { return data_[index(x, y, channel)]; }

    Eigen::Vector3d pixel(int x, int y) const;
    void set_pixel(int x, int y, const Eigen::Vector3d& rgb);

    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y, int channel) const
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3 +
               static_cast<std::size_t>(channel);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Rounds every channel to the nearest 8-bit level, i.e. what a save/load round trip produces.
Image quantize_8bit(const Image& image);

Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& image, const std::filesystem::path& path);

/// Dispatches on the file extension (.png, .ppm); other extensions are std::invalid_argument.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

} // namespace facelearn
