/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: src/render/shading.cpp
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
#include "facelearn/render/shading.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace facelearn {
namespace render {

ShBasis sh_basis(const Eigen::Vector3d& n)
{
    if (std::abs(n.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("sh_basis expects a unit normal, got length " + std::to_string(n.norm()));
    const double x = n.x(), y = n.y(), z = n.z();
    ShBasis h;
    h << 1.0, y, z, x, x * y, y * z, 3.0 * z * z - 1.0, x * z, x * x - y * y;
    return h;
}

Eigen::Matrix<double, 9, 3> sh_basis_jacobian(const Eigen::Vector3d& n)
{
    const double x = n.x(), y = n.y(), z = n.z();
    Eigen::Matrix<double, 9, 3> j;
    j << 0.0, 0.0, 0.0,
         0.0, 1.0, 0.0,
         0.0, 0.0, 1.0,
         1.0, 0.0, 0.0,
         y, x, 0.0,
         0.0, z, y,
         0.0, 0.0, 6.0 * z,
         z, 0.0, x,
         2.0 * x, -2.0 * y, 0.0;
    return j;
}

Eigen::Vector3d irradiance(const ShBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& gamma)
{
    if (gamma.size() != 27)
        throw std::invalid_argument("illumination needs 27 coefficients");
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int b = 0; b < 9; ++b)
        s += basis(b) * gamma.segment<3>(3 * b);
    return s;
}

Eigen::Vector3d shade(const Eigen::Vector3d& albedo, const Eigen::Vector3d& n, const Eigen::Ref<const Eigen::VectorXd>& gamma)
{
    return albedo.cwiseProduct(irradiance(sh_basis(n), gamma));
}

ImageSample sample_image(const Image& image, const Eigen::Vector2d& u)
{
    const int w = image.width();
    const int h = image.height();
    if (w < 2 || h < 2)
        throw std::invalid_argument("sample_image needs an image of at least 2x2 pixels");
    if (!(u.x() >= 0.5 && u.x() <= w - 0.5 && u.y() >= 0.5 && u.y() <= h - 0.5))
        throw std::out_of_range("sample_image: position (" + std::to_string(u.x()) + ", " + std::to_string(u.y()) +
                                ") lies outside the pixel-center grid");
    const double px = u.x() - 0.5;
    const double py = u.y() - 0.5;
    const int x0 = std::min(static_cast<int>(std::floor(px)), w - 2);
    const int y0 = std::min(static_cast<int>(std::floor(py)), h - 2);
    const double fx = px - x0;
    const double fy = py - y0;

    const Eigen::Vector3d p00 = image.pixel(x0, y0);
    const Eigen::Vector3d p10 = image.pixel(x0 + 1, y0);
    const Eigen::Vector3d p01 = image.pixel(x0, y0 + 1);
    const Eigen::Vector3d p11 = image.pixel(x0 + 1, y0 + 1);

    ImageSample s;
    s.value = (1.0 - fx) * (1.0 - fy) * p00 + fx * (1.0 - fy) * p10 + (1.0 - fx) * fy * p01 + fx * fy * p11;
    s.gradient.col(0) = (1.0 - fy) * (p10 - p00) + fy * (p11 - p01);
    s.gradient.col(1) = (1.0 - fx) * (p01 - p00) + fx * (p11 - p10);
    s.cell_x = x0;
    s.cell_y = y0;
    return s;
}

} // namespace render
} // namespace facelearn
