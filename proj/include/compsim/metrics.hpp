// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

namespace compsim {

// Mean squared error over all entries, or over the pixels whose mask entry is
// nonzero (`channels` entries per pixel). Throws std::invalid_argument on size
// mismatch or when nothing is selected.
double mse(std::span<const double> pred, std::span<const double> gt);
double masked_mse(std::span<const double> pred, std::span<const double> gt, int channels,
                  std::span<const std::uint8_t> mask);

// 10 log10(peak^2 / mse); +inf for identical inputs.
double psnr_from_mse(double mse, double peak = 1.0);
double psnr(std::span<const double> pred, std::span<const double> gt, double peak = 1.0);

// Structural similarity with an 11x11 Gaussian window (sigma 1.5) over the
// valid region, averaged over channels. Images are row-major, interleaved.
// Throws std::invalid_argument for images smaller than the window.
double ssim(std::span<const double> pred, std::span<const double> gt, int width, int height, int channels);

// |A and B| / |A or B| for binary masks; 1 when both are empty.
double iou(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace compsim
