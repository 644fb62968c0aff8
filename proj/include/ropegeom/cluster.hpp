// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_CLUSTER_HPP
#define ROPEGEOM_CLUSTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ropegeom/cloud.hpp"
#include "ropegeom/matrix.hpp"
#include "ropegeom/rng.hpp"

namespace ropegeom {

struct ClusterOptions {
  std::size_t pair_budget = 200000;
  // Both clouds smaller than this: every pair is enumerated.
  std::size_t exact_below = 2048;
  std::uint64_t seed = 0;
};

struct ClusterStats {
  double mean_intra_key_cosine = 0.0;
  double mean_intra_query_cosine = 0.0;
  double mean_inter_cosine = 0.0;
  double mean_intra_key_dot = 0.0;
  double mean_intra_query_dot = 0.0;
  double mean_inter_dot = 0.0;
  double silhouette = 0.0;
  double davies_bouldin = 0.0;
  std::size_t zero_vectors_excluded = 0;
  bool exact = true;
};

namespace detail {

struct PairMeans {
  double cos_sum = 0.0;
  std::size_t cos_count = 0;
  double dot_sum = 0.0;
  std::size_t dot_count = 0;

  void add(double d, double na, double nb) {
    dot_sum += d;
    ++dot_count;
    if (na > 0.0 && nb > 0.0) {
      cos_sum += std::clamp(d / (na * nb), -1.0, 1.0);
      ++cos_count;
    }
  }
  double cos_mean() const { return cos_count ? cos_sum / static_cast<double>(cos_count) : 0.0; }
  double dot_mean() const { return dot_count ? dot_sum / static_cast<double>(dot_count) : 0.0; }
};

inline std::vector<double> row_norms(const LatentCloud& c) {
  std::vector<double> n(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) n[i] = norm2(c.row(i));
  return n;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return std::sqrt(s);
}

inline PairMeans intra_pairs(const LatentCloud& c, const std::vector<double>& norms, bool exact,
                             std::size_t budget, Rng& rng) {
  PairMeans m;
  const std::size_t n = c.size();
  if (exact) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) m.add(dot(c.row(i), c.row(j)), norms[i], norms[j]);
  } else {
    for (std::size_t s = 0; s < budget; ++s) {
      const std::size_t i = rng.below(n);
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      m.add(dot(c.row(i), c.row(j)), norms[i], norms[j]);
    }
  }
  return m;
}

inline PairMeans cross_pairs(const LatentCloud& a, const std::vector<double>& na, const LatentCloud& b,
                             const std::vector<double>& nb, bool exact, std::size_t budget, Rng& rng) {
  PairMeans m;
  if (exact) {
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) m.add(dot(a.row(i), b.row(j)), na[i], nb[j]);
  } else {
    for (std::size_t s = 0; s < budget; ++s) {
      const std::size_t i = rng.below(a.size());
      const std::size_t j = rng.below(b.size());
      m.add(dot(a.row(i), b.row(j)), na[i], nb[j]);
    }
  }
  return m;
}

// Two-cluster silhouette with Euclidean distance. Exact: every point against
// every other point. Sampled: a random subset of points, each scored against
// random partners from both clusters.
inline double silhouette_two(const LatentCloud& a, const LatentCloud& b, bool exact, std::size_t budget,
                             Rng& rng) {
  const LatentCloud* clusters[2] = {&a, &b};
  auto score = [](double own, double other) {
    const double den = std::max(own, other);
    return den > 0.0 ? (other - own) / den : 0.0;
  };

  double total = 0.0;
  std::size_t counted = 0;
  if (exact) {
    for (int c = 0; c < 2; ++c) {
      const auto& own = *clusters[c];
      const auto& other = *clusters[1 - c];
      for (std::size_t i = 0; i < own.size(); ++i) {
        double s_own = 0.0;
        for (std::size_t j = 0; j < own.size(); ++j)
          if (j != i) s_own += distance(own.row(i), own.row(j));
        double s_other = 0.0;
        for (std::size_t j = 0; j < other.size(); ++j) s_other += distance(own.row(i), other.row(j));
        total += score(s_own / static_cast<double>(own.size() - 1), s_other / static_cast<double>(other.size()));
        ++counted;
      }
    }
    return total / static_cast<double>(counted);
  }

  const std::size_t n_total = a.size() + b.size();
  const std::size_t points = std::min<std::size_t>(n_total, 1000);
  const std::size_t partners = std::max<std::size_t>(1, budget / (2 * points));
  for (std::size_t s = 0; s < points; ++s) {
    std::size_t g = rng.below(n_total);
    const int c = g < a.size() ? 0 : 1;
    if (c == 1) g -= a.size();
    const auto& own = *clusters[c];
    const auto& other = *clusters[1 - c];
    double s_own = 0.0;
    for (std::size_t t = 0; t < partners; ++t) {
      std::size_t j = rng.below(own.size() - 1);
      if (j >= g) ++j;
      s_own += distance(own.row(g), own.row(j));
    }
    double s_other = 0.0;
    for (std::size_t t = 0; t < partners; ++t) s_other += distance(own.row(g), other.row(rng.below(other.size())));
    total += score(s_own / static_cast<double>(partners), s_other / static_cast<double>(partners));
    ++counted;
  }
  return total / static_cast<double>(counted);
}

inline std::vector<double> centroid(const LatentCloud& c) {
  std::vector<double> m(c.dim(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t k = 0; k < c.dim(); ++k) m[k] += c.row(i)[k];
  for (double& x : m) x /= static_cast<double>(c.size());
  return m;
}

// (S_a + S_b) / ||c_a - c_b|| where S is the mean distance to the centroid.
inline double davies_bouldin_two(const LatentCloud& a, const LatentCloud& b) {
  const auto ca = centroid(a);
  const auto cb = centroid(b);
  auto scatter = [](const LatentCloud& c, const std::vector<double>& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += distance(c.row(i), m);
    return s / static_cast<double>(c.size());
  };
  const double sep = distance(ca, cb);
  const double spread = scatter(a, ca) + scatter(b, cb);
  if (sep == 0.0) return spread == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return spread / sep;
}

}  // namespace detail

// Intra/inter alignment of a key cloud and a query cloud, plus silhouette and
// Davies-Bouldin on the {keys, queries} labelling. Zero vectors are left out
// of cosine means and counted in zero_vectors_excluded.
inline ClusterStats cluster_stats(const LatentCloud& keys, const LatentCloud& queries,
                                  const ClusterOptions& options = {}) {
  if (keys.dim() != queries.dim()) throw std::invalid_argument("cluster_stats: dimension mismatch");
  if (keys.size() < 2 || queries.size() < 2)
    throw std::invalid_argument("cluster_stats: each cloud needs at least two points");

  const auto kn = detail::row_norms(keys);
  const auto qn = detail::row_norms(queries);
  const auto zeros = [](const std::vector<double>& n) {
    return static_cast<std::size_t>(std::count(n.begin(), n.end(), 0.0));
  };
  const std::size_t kz = zeros(kn);
  const std::size_t qz = zeros(qn);
  if (kz == keys.size() || qz == queries.size()) throw std::invalid_argument("cluster_stats: all-zero cloud");

  ClusterStats out;
  out.zero_vectors_excluded = kz + qz;
  out.exact = keys.size() < options.exact_below && queries.size() < options.exact_below;

  Rng rng(options.seed);
  const std::size_t budget = std::max<std::size_t>(options.pair_budget / 3, 1);
  const auto kk = detail::intra_pairs(keys, kn, out.exact, budget, rng);
  const auto qq = detail::intra_pairs(queries, qn, out.exact, budget, rng);
  const auto kq = detail::cross_pairs(keys, kn, queries, qn, out.exact, budget, rng);

  out.mean_intra_key_cosine = kk.cos_mean();
  out.mean_intra_query_cosine = qq.cos_mean();
  out.mean_inter_cosine = kq.cos_mean();
  out.mean_intra_key_dot = kk.dot_mean();
  out.mean_intra_query_dot = qq.dot_mean();
  out.mean_inter_dot = kq.dot_mean();
  out.silhouette = detail::silhouette_two(keys, queries, out.exact, options.pair_budget, rng);
  out.davies_bouldin = detail::davies_bouldin_two(keys, queries);
  return out;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_CLUSTER_HPP
