// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace compsim {

double mse(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size() || pred.empty()) throw std::invalid_argument("mse: size mismatch or empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double masked_mse(std::span<const double> pred, std::span<const double> gt, int channels,
                  std::span<const std::uint8_t> mask) {
  const auto c = static_cast<std::size_t>(channels);
  if (channels < 1 || pred.size() != gt.size() || pred.size() != mask.size() * c)
    throw std::invalid_argument("masked_mse: size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    for (std::size_t k = 0; k < c; ++k) {
      const double d = pred[p * c + k] - gt[p * c + k];
      sum += d * d;
    }
    count += c;
  }
  if (count == 0) throw std::invalid_argument("masked_mse: empty mask");
  return sum / static_cast<double>(count);
}

double psnr_from_mse(double m, double peak) {
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

double psnr(std::span<const double> pred, std::span<const double> gt, double peak) {
  return psnr_from_mse(mse(pred, gt), peak);
}

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    w[i] = std::exp(-x * x / (2.0 * kWindowSigma * kWindowSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode filter of one channel.
std::vector<double> filter(const std::vector<double>& img, int width, int height) {
  static const auto w = gaussian_window();
  const int ow = width - kWindow + 1;
  const int oh = height - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += w[k] * img[static_cast<std::size_t>(y) * width + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += w[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim(std::span<const double> pred, std::span<const double> gt, int width, int height, int channels) {
  if (width < kWindow || height < kWindow || channels < 1)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  if (pred.size() != pixels * channels || gt.size() != pixels * channels)
    throw std::invalid_argument("ssim: size mismatch");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double total = 0.0;
  std::vector<double> a(pixels), b(pixels), aa(pixels), bb(pixels), ab(pixels);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < pixels; ++p) {
      a[p] = pred[p * channels + c];
      b[p] = gt[p * channels + c];
      aa[p] = a[p] * a[p];
      bb[p] = b[p] * b[p];
      ab[p] = a[p] * b[p];
    }
    const auto mu_a = filter(a, width, height);
    const auto mu_b = filter(b, width, height);
    const auto e_aa = filter(aa, width, height);
    const auto e_bb = filter(bb, width, height);
    const auto e_ab = filter(ab, width, height);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      sum += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / channels;
}

double iou(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("iou: size mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace compsim
