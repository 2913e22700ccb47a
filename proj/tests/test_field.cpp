// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "compsim/field.hpp"
#include "test_util.hpp"

namespace compsim {
namespace {

TEST(VoxelField, ParameterCounts) {
  VoxelField f({8, 8, 8}, -2.0, 0.0);
  EXPECT_EQ(f.density_raw().size(), 512u);
  EXPECT_EQ(f.color_raw().size(), 1536u);
}

TEST(VoxelField, RejectsTinyResolution) {
  EXPECT_THROW(VoxelField({1, 8, 8}), std::invalid_argument);
  EXPECT_THROW(VoxelField({8, 8, 0}), std::invalid_argument);
}

TEST(VoxelField, ConstantInitQuery) {
  VoxelField f({8, 8, 8}, -2.0, 0.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const FieldSample s = field_query(f, testing::random_vec(rng, -1, 1));
    EXPECT_NEAR(s.sigma, softplus(-2.0), 1e-7);
    EXPECT_NEAR(s.rgb.x, 0.5, 1e-12);
  }
}

TEST(VoxelField, IdenticalInitIsBitwiseEqual) {
  VoxelField a({5, 6, 7}, -1.25, 0.5), b({5, 6, 7}, -1.25, 0.5);
  EXPECT_TRUE(a.bitwise_equal(b));
  b.density_raw()[3] = 0.0f;
  EXPECT_FALSE(a.bitwise_equal(b));
}

TEST(FieldQuery, CornerAndMidpoint) {
  VoxelFieldD f({4, 4, 4}, 0.0, 0.0);
  std::mt19937_64 rng(2);
  testing::fill_random(f, rng, -3, 3);
  // Corner (i, j, k) sits at -1 + 2 i / (n - 1).
  auto corner = [](int i) { return -1.0 + 2.0 * i / 3.0; };
  const std::size_t idx = f.index(1, 2, 3);
  const FieldSample s = field_query(f, {corner(1), corner(2), corner(3)});
  EXPECT_NEAR(s.sigma, softplus(f.density_raw()[idx]), 1e-12);
  EXPECT_NEAR(s.rgb.y, sigmoid(f.color_raw()[3 * idx + 1]), 1e-12);

  const std::size_t a = f.index(1, 2, 3), b = f.index(2, 2, 3);
  const FieldSample m = field_query(f, {0.5 * (corner(1) + corner(2)), corner(2), corner(3)});
  EXPECT_NEAR(m.sigma, softplus(0.5 * (f.density_raw()[a] + f.density_raw()[b])), 1e-12);
  EXPECT_NEAR(m.rgb.z, sigmoid(0.5 * (f.color_raw()[3 * a + 2] + f.color_raw()[3 * b + 2])), 1e-12);
}

TEST(FieldQuery, OutsideDomainIsEmpty) {
  VoxelField f({4, 4, 4}, 3.0, 1.0);
  const FieldSample s = field_query(f, {2, 0, 0});
  EXPECT_EQ(s.sigma, 0.0);
  EXPECT_EQ(s.rgb, (Rgb{0, 0, 0}));
}

TEST(FieldQuery, RejectsNonFinite) {
  VoxelField f({4, 4, 4});
  EXPECT_THROW(field_query(f, {std::nan(""), 0, 0}), std::invalid_argument);
  EXPECT_THROW(field_query(f, {0, std::numeric_limits<double>::infinity(), 0}), std::invalid_argument);
}

TEST(FieldQuery, RangesAndContinuity) {
  VoxelFieldD f({6, 5, 4}, 0.0, 0.0);
  std::mt19937_64 rng(3);
  testing::fill_random(f, rng, -8, 8, -8, 8);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p = testing::random_vec(rng, -0.999, 0.999);
    const FieldSample a = field_query(f, p);
    EXPECT_GE(a.sigma, 0.0);
    for (int c = 0; c < 3; ++c) {
      EXPECT_GE(a.rgb[c], 0.0);
      EXPECT_LE(a.rgb[c], 1.0);
    }
    const FieldSample b = field_query(f, p + Vec3{1e-6, -1e-6, 1e-6});
    // Raw spread is 16, cell width 0.4: a 1e-6 move shifts raw values by < 1e-4.
    EXPECT_LT(std::abs(a.sigma - b.sigma), 1e-4);
    EXPECT_LT(max_abs_diff(a.rgb, b.rgb), 1e-4);
  }
}

TEST(FieldBackward, MatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  VoxelFieldD f({4, 4, 4}, 0.0, 0.0);
  testing::fill_random(f, rng, -2, 2);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 p = testing::random_vec(rng, -0.95, 0.95);
    const double d_sigma = 0.7;
    const Rgb d_rgb{-0.3, 1.1, 0.4};
    GradBufferD g(f);
    field_query_backward(f, p, d_sigma, d_rgb, g);
    auto objective = [&](const VoxelFieldD& field) {
      const FieldSample s = field_query(field, p);
      return d_sigma * s.sigma + dot(d_rgb, s.rgb);
    };
    auto check = [&](std::span<double> params, std::span<const double> analytic) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double up = objective(f);
        params[i] = saved - h;
        const double down = objective(f);
        params[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
      }
    };
    check(f.density_raw(), g.d_density_raw());
    check(f.color_raw(), g.d_color_raw());
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(FieldBackward, ZeroUpstreamAndOutsideLeaveGradsUntouched) {
  VoxelFieldD f({4, 4, 4}, 0.3, 0.2);
  GradBufferD g(f);
  field_query_backward(f, {0.1, 0.2, 0.3}, 0.0, {0, 0, 0}, g);
  field_query_backward(f, {1.5, 0.0, 0.0}, 1.0, {1, 1, 1}, g);
  for (double v : g.d_density_raw()) EXPECT_EQ(v, 0.0);
  for (double v : g.d_color_raw()) EXPECT_EQ(v, 0.0);
}

TEST(FieldBackward, RejectsShapeMismatch) {
  VoxelFieldD f({4, 4, 4});
  GradBufferD g(Resolution{4, 4, 5});
  EXPECT_THROW(field_query_backward(f, {0, 0, 0}, 1.0, {0, 0, 0}, g), std::invalid_argument);
}

TEST(Activations, SoftplusIsStable) {
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-9);
  EXPECT_GT(softplus(-800.0), -1e-300);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
  EXPECT_NEAR(softplus_grad(1.3), sigmoid(1.3), 1e-15);
}

}  // namespace
}  // namespace compsim
