// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ropegeom/cluster.hpp"
#include "ropegeom/pca.hpp"
#include "support.hpp"

using namespace ropegeom;

namespace {

LatentCloud gaussian(std::mt19937_64& gen, std::size_t n, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(n, d);
  for (double& x : m.data()) x = nd(gen);
  return LatentCloud(std::move(m));
}

// Tight cluster around +-e1.
LatentCloud around_axis(std::mt19937_64& gen, std::size_t n, std::size_t d, double sign, double eps) {
  auto c = gaussian(gen, n, d, eps);
  Matrix m = c.data();
  for (std::size_t i = 0; i < n; ++i) m(i, 0) += sign;
  return LatentCloud(std::move(m));
}

}  // namespace

TEST(Cluster, MatchesScikitLearnReference) {
  // Reference values from sklearn.metrics.silhouette_score and
  // davies_bouldin_score on the same 13 points.
  Matrix k(6, 4);
  Matrix q(7, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    const double x = static_cast<double>(i);
    k(i, 0) = std::cos(x);
    k(i, 1) = std::sin(2 * x);
    k(i, 2) = 1 + 0.1 * x;
    k(i, 3) = -x / 7;
  }
  for (std::size_t i = 0; i < 7; ++i) {
    const double x = static_cast<double>(i);
    q(i, 0) = std::sin(x) + 2;
    q(i, 1) = std::cos(3 * x);
    q(i, 2) = -1;
    q(i, 3) = x / 5;
  }
  const auto s = cluster_stats(LatentCloud(k), LatentCloud(q));
  EXPECT_TRUE(s.exact);
  EXPECT_NEAR(s.silhouette, 0.5250373219863737, 1e-12);
  EXPECT_NEAR(s.davies_bouldin, 0.6820621607860227, 1e-12);
  EXPECT_NEAR(s.mean_intra_key_cosine, 0.5434174783988418, 1e-12);
  EXPECT_NEAR(s.mean_intra_query_cosine, 0.7841033913587616, 1e-12);
  EXPECT_NEAR(s.mean_inter_cosine, -0.3598816648931386, 1e-12);
}

TEST(Cluster, AntipodalTightClusters) {
  std::mt19937_64 gen(1);
  const auto s = cluster_stats(around_axis(gen, 300, 16, 1.0, 0.01), around_axis(gen, 300, 16, -1.0, 0.01));
  EXPECT_NEAR(s.mean_inter_cosine, -1.0, 1e-2);
  EXPECT_NEAR(s.mean_intra_key_cosine, 1.0, 1e-2);
  EXPECT_GT(s.silhouette, 0.95);
  EXPECT_LT(s.davies_bouldin, 0.1);
}

TEST(Cluster, IdenticalCloudsDoNotSeparate) {
  std::mt19937_64 gen(2);
  const auto c = gaussian(gen, 200, 8);
  const auto s = cluster_stats(c, c);
  EXPECT_LE(s.silhouette, 0.0);
  EXPECT_TRUE(std::isinf(s.davies_bouldin));
}

TEST(Cluster, GaussianCloudsAreNearlyOrthogonal) {
  std::mt19937_64 gen(3);
  const auto s = cluster_stats(gaussian(gen, 1000, 64), gaussian(gen, 1000, 64));
  EXPECT_NEAR(s.mean_intra_key_cosine, 0.0, 0.05);
  EXPECT_NEAR(s.mean_intra_query_cosine, 0.0, 0.05);
  EXPECT_NEAR(s.mean_inter_cosine, 0.0, 0.05);
}

TEST(Cluster, SampledAgreesWithExact) {
  std::mt19937_64 gen(4);
  const auto k = around_axis(gen, 600, 8, 1.0, 0.5);
  const auto q = around_axis(gen, 600, 8, -1.0, 0.5);
  const auto exact = cluster_stats(k, q);
  ClusterOptions o;
  o.exact_below = 10;
  o.seed = 99;
  const auto sampled = cluster_stats(k, q, o);
  EXPECT_TRUE(exact.exact);
  EXPECT_FALSE(sampled.exact);
  EXPECT_NEAR(sampled.mean_inter_cosine, exact.mean_inter_cosine, 0.01);
  EXPECT_NEAR(sampled.mean_intra_key_dot, exact.mean_intra_key_dot, 0.02);
  EXPECT_NEAR(sampled.silhouette, exact.silhouette, 0.02);
  EXPECT_EQ(sampled.davies_bouldin, exact.davies_bouldin);
  const auto again = cluster_stats(k, q, o);
  EXPECT_EQ(again.silhouette, sampled.silhouette);
  EXPECT_EQ(again.mean_inter_cosine, sampled.mean_inter_cosine);
}

TEST(Cluster, ZeroVectorsExcludedFromCosines) {
  Matrix k(3, 2, {0, 0, 1, 0, 2, 0});
  Matrix q(2, 2, {-1, 0, -3, 0});
  const auto s = cluster_stats(LatentCloud(k), LatentCloud(q));
  EXPECT_EQ(s.zero_vectors_excluded, 1u);
  EXPECT_DOUBLE_EQ(s.mean_intra_key_cosine, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_inter_cosine, -1.0);
  // Dots keep every pair: (0*1 + 0*2 + 1*2) / 3.
  EXPECT_DOUBLE_EQ(s.mean_intra_key_dot, 2.0 / 3.0);
  EXPECT_THROW(cluster_stats(LatentCloud(Matrix(2, 2)), LatentCloud(q)), std::invalid_argument);
  EXPECT_THROW(cluster_stats(LatentCloud(Matrix(1, 2, {1, 1})), LatentCloud(q)), std::invalid_argument);
}

TEST(Pca, BasisIsOrthonormalAndContracts) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 20; ++t) {
    const auto ref = gaussian(gen, 100, 12);
    const auto target = gaussian(gen, 50, 12, 3.0);
    const auto snaps = pca_snapshot(ref, {ref, target});
    const Matrix& b = snaps[0].basis;
    EXPECT_LE(max_abs_diff(b.transposed() * b, Matrix::identity(2)), 1e-8);
    EXPECT_GT(snaps[0].explained_fraction, 0.0);
    EXPECT_LE(snaps[0].explained_fraction, 1.0);
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double proj = std::hypot(snaps[1].projected(i, 0), snaps[1].projected(i, 1));
      EXPECT_LE(proj, norm2(target.row(i)) * (1 + 1e-12));
    }
  }
}

TEST(Pca, PlanarReferenceIsFullyExplained) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  Matrix m(80, 10);
  for (std::size_t i = 0; i < 80; ++i) {
    m(i, 0) = 3 * nd(gen);
    m(i, 1) = nd(gen);
  }
  const LatentCloud ref(m);
  const auto snap = pca_snapshot(ref, {ref}).front();
  EXPECT_NEAR(snap.explained_fraction, 1.0, 1e-12);
  // The projection onto the spanning plane keeps every point's length.
  for (std::size_t i = 0; i < 80; ++i) {
    const double p2 = snap.projected(i, 0) * snap.projected(i, 0) + snap.projected(i, 1) * snap.projected(i, 1);
    EXPECT_NEAR(std::sqrt(p2), std::hypot(m(i, 0), m(i, 1)), 1e-9);
  }
  Matrix line(5, 4);
  for (std::size_t i = 0; i < 5; ++i) line(i, 0) = static_cast<double>(i + 1);
  EXPECT_THROW(pca_snapshot(LatentCloud(line), {}), std::invalid_argument);
}
