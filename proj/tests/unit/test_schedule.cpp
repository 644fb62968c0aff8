// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ropegeom/schedule.hpp"

using namespace ropegeom;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST(Schedule, StandardSmallDimensions) {
  const auto s4 = build_schedule(StandardConfig{10000.0}, 4);
  ASSERT_EQ(s4.planes(), 2u);
  EXPECT_DOUBLE_EQ(s4.frequency(0), 1.0);
  EXPECT_NEAR(s4.frequency(1), 0.01, 1e-15);
  EXPECT_NEAR(s4.wavelength(0), kTwoPi, 1e-12);
  EXPECT_NEAR(s4.wavelength(1), 200.0 * std::numbers::pi, 1e-9);

  const auto s2 = build_schedule(StandardConfig{10000.0}, 2);
  ASSERT_EQ(s2.planes(), 1u);
  EXPECT_DOUBLE_EQ(s2.frequency(0), 1.0);
}

TEST(Schedule, StandardMatchesClosedForm) {
  const auto s = build_schedule(StandardConfig{500000.0}, 128);
  for (std::size_t k = 0; k < 64; ++k)
    EXPECT_NEAR(s.frequency(k), std::pow(500000.0, -2.0 * k / 128.0), 1e-15) << k;
  EXPECT_EQ(s.rotated_planes(), 64u);
}

TEST(Schedule, RopeIdEndpoints) {
  const auto s = build_schedule(RopeIdConfig{4096, 32, 2, 0.5}, 8);
  EXPECT_EQ(s.rotated_planes(), 2u);
  EXPECT_NEAR(s.frequency(0), kTwoPi / 32.0, 1e-15);
  EXPECT_NEAR(s.frequency(1), 4.0 * std::numbers::pi / 4096.0, 1e-15);
  EXPECT_NEAR(s.wavelength(0), 32.0, 1e-12);
  EXPECT_NEAR(s.wavelength(1), 2048.0, 1e-9);
  EXPECT_FALSE(s.rotates(2));
  EXPECT_FALSE(s.rotates(3));
}

TEST(Schedule, RopeIdLogSpacing) {
  const auto s = build_schedule(RopeIdConfig{4096, 32, 2, 0.5}, 128);
  ASSERT_EQ(s.rotated_planes(), 32u);
  const double step = std::log(s.frequency(1) / s.frequency(0));
  for (std::size_t k = 1; k + 1 < 32; ++k)
    EXPECT_NEAR(std::log(s.frequency(k + 1) / s.frequency(k)), step, 1e-12);
}

TEST(Schedule, HighFrequencyEndpoints) {
  const auto s = build_schedule(HighFrequencyConfig{4096, std::nullopt}, 128);
  EXPECT_DOUBLE_EQ(s.frequency(0), 1.0);
  EXPECT_NEAR(s.wavelength(63), 4096.0, 1e-9);
  EXPECT_EQ(s.rotated_planes(), 64u);
  for (std::size_t k = 0; k < 64; ++k) EXPECT_LE(s.wavelength(k), 4096.0 + 1e-9);

  const auto t = build_schedule(HighFrequencyConfig{4096, 652.0}, 128);
  EXPECT_NEAR(t.frequency(63), std::pow(652.0, -126.0 / 128.0), 1e-15);

  const auto one = build_schedule(HighFrequencyConfig{4096, std::nullopt}, 2);
  EXPECT_NEAR(one.wavelength(0), 4096.0, 1e-9);
}

TEST(Schedule, PartialRotatesLeadingPlanes) {
  const auto s = build_schedule(PartialConfig{500000.0, 0.5}, 128);
  EXPECT_EQ(s.rotated_planes(), 32u);
  for (std::size_t k = 0; k < 32; ++k)
    EXPECT_NEAR(s.frequency(k), std::pow(500000.0, -2.0 * k / 64.0), 1e-15) << k;
  for (std::size_t k = 32; k < 64; ++k) EXPECT_FALSE(s.rotates(k));
}

TEST(Schedule, RejectsInvalidInput) {
  EXPECT_THROW(build_schedule(StandardConfig{}, 7), std::invalid_argument);
  EXPECT_THROW(build_schedule(StandardConfig{}, 0), std::invalid_argument);
  EXPECT_THROW(build_schedule(StandardConfig{-1.0}, 8), std::invalid_argument);
  EXPECT_THROW(build_schedule(PartialConfig{10000.0, 0.0}, 8), std::invalid_argument);
  EXPECT_THROW(build_schedule(PartialConfig{10000.0, 1.5}, 8), std::invalid_argument);
  EXPECT_THROW(build_schedule(PartialConfig{10000.0, 0.1}, 4), std::invalid_argument);
  EXPECT_THROW(build_schedule(RopeIdConfig{4096, 4096, 2, 0.5}, 8), std::invalid_argument);
  EXPECT_THROW(build_schedule(RopeIdConfig{0, 32, 2, 0.5}, 8), std::invalid_argument);
  EXPECT_THROW(build_schedule(HighFrequencyConfig{4, std::nullopt}, 8), std::invalid_argument);
  EXPECT_THROW(FrequencySchedule({0.5, 1.0}, 2, StandardConfig{}), std::invalid_argument);
  EXPECT_THROW(FrequencySchedule({1.0, 0.0}, 2, StandardConfig{}), std::invalid_argument);
}

TEST(Schedule, PropertyMonotoneAndRopeIdCycles) {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<int> half(1, 128);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  std::uniform_int_distribution<int> wave(2, 64);
  std::uniform_int_distribution<int> cyc(1, 8);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 2 * static_cast<std::size_t>(half(gen));
    std::vector<RopeVariantConfig> configs = {
        StandardConfig{std::pow(10.0, 2.0 + 4.0 * frac(gen))},
        HighFrequencyConfig{4096, std::nullopt},
        PartialConfig{500000.0, frac(gen)},
        RopeIdConfig{4096, wave(gen), cyc(gen), frac(gen)},
    };
    for (const auto& c : configs) {
      std::optional<FrequencySchedule> s;
      try {
        s.emplace(build_schedule(c, d));
      } catch (const std::invalid_argument&) {
        continue;  // fraction selecting zero planes on tiny heads
      }
      ++checked;
      for (std::size_t k = 0; k < s->planes(); ++k) {
        ASSERT_GT(s->frequency(k), 0.0);
        if (k) ASSERT_LE(s->frequency(k), s->frequency(k - 1));
      }
      if (const auto* r = std::get_if<RopeIdConfig>(&c)) {
        const double slowest = s->frequency(s->rotated_planes() - 1);
        const double need = kTwoPi * static_cast<double>(r->cycles_per_train_len);
        ASSERT_GE(static_cast<double>(r->train_len) * slowest, need * (1.0 - 1e-12));
        if (s->rotated_planes() > 1) ASSERT_NEAR(static_cast<double>(r->train_len) * slowest, need, 1e-9);
      }
    }
  }
  EXPECT_GT(checked, 3500);
}
