// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ropegeom/theory.hpp"
#include "support.hpp"

using namespace ropegeom;

namespace {

std::vector<std::int64_t> doubling(std::int64_t to) {
  std::vector<std::int64_t> g;
  for (std::int64_t n = 1; n <= to; n *= 2) g.push_back(n);
  return g;
}

RankOneSpec spec(std::vector<double> v, std::int64_t n, UKind kind = UKind::ones, double param = 0.0) {
  RankOneSpec s;
  s.v = std::move(v);
  s.n_grid = doubling(n);
  s.u_kind = kind;
  s.u_param = param;
  return s;
}

}  // namespace

TEST(Theory, RankOneCurveMatchesDirectSpectra) {
  const auto s = build_schedule(StandardConfig{}, 16);
  auto sp = spec(uniform_v(16), 512, UKind::oscillating, 0.5);
  const auto curve = rank_one_curve(sp, s);
  for (const auto& p : curve) {
    Matrix m(static_cast<std::size_t>(p.n), 16);
    for (std::int64_t j = 0; j < p.n; ++j)
      for (std::size_t c = 0; c < 16; ++c) m(static_cast<std::size_t>(j), c) = sp.u(j) * sp.v[c];
    const LatentCloud x(m);
    const auto direct = spectral_summary(apply_rope(x, s));
    EXPECT_NEAR(p.post.spectral_norm, direct.spectral_norm, 1e-9 * direct.spectral_norm) << p.n;
    EXPECT_NEAR(p.post.stable_rank, direct.stable_rank, 1e-9 * direct.stable_rank) << p.n;
    EXPECT_NEAR(p.pre.stable_rank, 1.0, 1e-12);
  }
}

TEST(Theory, Lemma1SinglePlane) {
  const auto r = verify_lemma1(spec(single_plane_v(128), 65536), build_schedule(StandardConfig{}, 128));
  EXPECT_TRUE(r.passed());
  EXPECT_TRUE(r.asymptotic_checked);
  EXPECT_NEAR(r.points.back().measured, 1.0 / std::sqrt(2.0), 0.05 / std::sqrt(2.0));
}

TEST(Theory, Lemma1UniformDirection) {
  const auto r = verify_lemma1(spec(uniform_v(16), 65536), build_schedule(StandardConfig{}, 16));
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.points.back().predicted, 0.25, 1e-15);
  EXPECT_NEAR(r.points.back().measured, 0.25, 0.05);
}

TEST(Theory, Lemma1SingleRowIsTrivial) {
  auto sp = spec(single_plane_v(128), 1);
  const auto r = verify_lemma1(sp, build_schedule(StandardConfig{}, 128));
  EXPECT_TRUE(r.passed());
  EXPECT_FALSE(r.asymptotic_checked);
  EXPECT_DOUBLE_EQ(r.points.back().measured, 1.0);
}

TEST(Theory, Theorem1SinglePlane) {
  const auto r = verify_theorem1(spec(single_plane_v(128), 65536), build_schedule(StandardConfig{}, 128));
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.points.back().measured, 2.0, 0.1);
}

TEST(Theory, Theorem1UniformDirectionLooseTier) {
  const auto sched = build_schedule(StandardConfig{}, 16);
  const auto r = verify_theorem1(spec(uniform_v(16), 65536), sched, kLooseTolerance);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.points.back().measured, 16.0, 1.6);
  // Still visibly short of the limit at this n.
  EXPECT_LT(r.points.back().measured, 15.2);
  EXPECT_FALSE(verify_theorem1(spec(uniform_v(16), 65536), sched, kStrictTolerance).passed());
}

TEST(Theory, PropertyDualityAndLimitBoundsAcrossRowScales) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> half(1, 16);
  std::uniform_real_distribution<double> amp(-0.9, 0.9);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 60; ++t) {
    const std::size_t d = 2 * static_cast<std::size_t>(half(gen));
    std::vector<double> v(d);
    double norm = 0.0;
    for (double& x : v) norm += (x = nd(gen)) * x;
    for (double& x : v) x /= std::sqrt(norm);
    const UKind kind = static_cast<UKind>(t % 3);
    auto sp = spec(v, 2048, kind, kind == UKind::ones ? 0.0 : amp(gen));
    for (const auto& p : rank_one_curve(sp, build_schedule(StandardConfig{}, d))) {
      const double f = p.fsv_ratio();
      ASSERT_NEAR(p.srank_ratio() * f * f, 1.0, 1e-6) << t;
      ASSERT_LE(p.frobenius_deviation(), 1e-12);
      ASSERT_LE(f, 1.0 + 1e-9);
      ASSERT_GE(f, 1.0 / std::sqrt(static_cast<double>(d)) - 1e-9);
      ASSERT_GE(p.srank_ratio(), 1.0 - 1e-9);
      ASSERT_LE(p.srank_ratio(), static_cast<double>(d) + 1e-9);
    }
  }
}

TEST(Theory, Lemma1HoldsForEveryRowScaleKind) {
  const auto sched = build_schedule(StandardConfig{}, 32);
  for (auto [kind, param] : {std::pair{UKind::ones, 0.0}, std::pair{UKind::monotone, 2.0},
                             std::pair{UKind::oscillating, 0.8}}) {
    const auto r = verify_lemma1(spec(single_plane_v(32), 65536, kind, param), sched);
    EXPECT_TRUE(r.passed()) << static_cast<int>(kind);
  }
}

TEST(Theory, SpecValidation) {
  RankOneSpec s;
  s.v = {1.0, 1.0};
  s.n_grid = {1};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.v = {1.0, 0.0};
  s.n_grid = {};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.n_grid = {4};
  s.u_kind = UKind::oscillating;
  s.u_param = 1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_THROW(verify_lemma1(spec(single_plane_v(8), 16), build_schedule(PartialConfig{}, 8)),
               std::invalid_argument);
}

TEST(Theory, Lemma2RandomAndAdversarial) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  Matrix m(1024, 64);
  for (double& x : m.data()) x = nd(gen);
  const LatentCloud c(m);
  for (const auto& v : fig7_preset_variants()) EXPECT_LT(verify_lemma2(c, build_schedule(v, 64)), 1e-6);

  const LatentCloud single(Matrix(1, 64, std::vector<double>(64, 0.5)));
  EXPECT_EQ(verify_lemma2(single, build_schedule(StandardConfig{}, 64)), 0.0);

  // Rows alternate between 1e-6 and 1e6 scales.
  Matrix a(2000, 16);
  std::vector<double> pre_terms;
  for (std::size_t i = 0; i < 2000; ++i) {
    const double u = i % 2 ? 1e6 : 1e-6;
    for (std::size_t j = 0; j < 16; ++j) {
      a(i, j) = u * (1.0 + 0.1 * static_cast<double>(j));
      pre_terms.push_back(a(i, j) * a(i, j));
    }
  }
  const LatentCloud adv(a);
  const auto sched = build_schedule(StandardConfig{}, 16);
  const auto rot = apply_rope(adv, sched);
  std::vector<double> post_terms;
  for (double x : rot.data().data()) post_terms.push_back(x * x);
  const double want = std::abs(std::sqrt(oracle::compensated_sum(post_terms)) -
                               std::sqrt(oracle::compensated_sum(pre_terms))) /
                      std::sqrt(oracle::compensated_sum(pre_terms));
  const double got = verify_lemma2(adv, sched);
  EXPECT_LT(got, 1e-5);
  EXPECT_LT(want, 1e-5);
  EXPECT_THROW(verify_lemma2(LatentCloud(Matrix(3, 4)), build_schedule(StandardConfig{}, 4)),
               std::invalid_argument);
}

TEST(Theory, Fig7ShortGridVerdictsAndOrdering) {
  const std::vector<std::int64_t> grid{256, 1024, 4096, 16384, 65536};
  const auto res = synth_fig7(128, 4096, grid, fig7_preset_variants());
  ASSERT_EQ(res.rows.size(), 20u);
  auto at = [&](const std::string& v, std::int64_t n) {
    for (const auto& r : res.rows)
      if (r.variant == v && r.n == n) return r.fsv_ratio;
    ADD_FAILURE() << v << " " << n;
    return 0.0;
  };
  const auto& standard = res.verdicts[0];
  const auto& ropeid = res.verdicts[3];
  EXPECT_FALSE(standard.c1);
  EXPECT_FALSE(standard.c2);
  EXPECT_TRUE(ropeid.c1);
  EXPECT_TRUE(ropeid.c2);
  EXPECT_LT(at("standard", 65536), 0.9 * at("standard", 4096));
  EXPECT_NEAR(at("rope-id", 65536), at("rope-id", 4096), 0.02);
  for (const char* v : {"partial", "rope-id"}) {
    EXPECT_GT(at(v, 65536), at("standard", 65536));
    EXPECT_GT(at(v, 65536), at("high-frequency", 65536));
  }
  const double drift_partial = std::abs(at("partial", 65536) - at("partial", 4096));
  const double drift_ropeid = std::abs(at("rope-id", 65536) - at("rope-id", 4096));
  EXPECT_LT(drift_ropeid, drift_partial);
}

TEST(Theory, Fig7SingleRowIsOne) {
  const auto res = synth_fig7(128, 4096, {1}, fig7_preset_variants());
  for (const auto& r : res.rows) EXPECT_DOUBLE_EQ(r.fsv_ratio, 1.0) << r.variant;
  for (const auto& v : res.verdicts) EXPECT_FALSE(v.available);
}
