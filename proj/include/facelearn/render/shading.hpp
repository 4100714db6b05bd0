/*
 * facelearn - Multi-frame face model learning by inverse rendering.
 *
 * File: include/facelearn/render/shading.hpp
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

#include "facelearn/core/image.hpp"

#include "Eigen/Core"

namespace facelearn {
namespace render {

using ShBasis = Eigen::Matrix<double, 9, 1>;

/**
 * The nine unnormalised real SH polynomials up to band 2:
 * (1, y, z, x, xy, yz, 3z^2 - 1, xz, x^2 - y^2).
 * Normalisation constants are absorbed into the illumination coefficients.
 * Throws std::invalid_argument unless |n| = 1 within 1e-6.
 */
ShBasis sh_basis(const Eigen::Vector3d& n);

/// 9x3 Jacobian of sh_basis with respect to the normal.
Eigen::Matrix<double, 9, 3> sh_basis_jacobian(const Eigen::Vector3d& n);

/// Per-channel irradiance sum_b gamma[3b + c] H_b(n).
Eigen::Vector3d irradiance(const ShBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& gamma);

/// Lambertian shading r * sum_b gamma_b H_b(n), not clamped.
Eigen::Vector3d shade(const Eigen::Vector3d& albedo, const Eigen::Vector3d& n, const Eigen::Ref<const Eigen::VectorXd>& gamma);

/// Bilinear lookup of the four pixel centers around u, plus its 3x2 derivative.
struct ImageSample
{
    Eigen::Vector3d value;
    Eigen::Matrix<double, 3, 2> gradient;
    int cell_x = 0; ///< Index of the upper-left pixel of the interpolation cell.
    int cell_y = 0;
};

/**
 * Samples an image at continuous screen position u. Valid for
 * u in [0.5, W - 0.5] x [0.5, H - 0.5]; anything else throws, since callers
 * are expected to filter through the visible set first.
 */
ImageSample sample_image(const Image& image, const Eigen::Vector2d& u);

} // namespace render
} // namespace facelearn
