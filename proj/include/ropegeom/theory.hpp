// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_THEORY_HPP
#define ROPEGEOM_THEORY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ropegeom/cloud.hpp"
#include "ropegeom/rotation.hpp"
#include "ropegeom/schedule.hpp"
#include "ropegeom/spectral.hpp"

namespace ropegeom {

// Generators for the row scales u_j of a rank-1 cloud X = u v^T. Each keeps
// u_j = Theta(1) with o(n) total variation of u_j^2.
enum class UKind {
  ones,         // u_j = 1
  monotone,     // u_j = 1 + slope * j / (j + 1024)
  oscillating,  // u_j = 1 + amplitude * cos(j) / sqrt(1 + j), amplitude < 1
};

struct RankOneSpec {
  UKind u_kind = UKind::ones;
  double u_param = 0.0;  // slope or amplitude
  std::vector<double> v;
  std::vector<std::int64_t> n_grid;

  double u(std::int64_t j) const {
    const double x = static_cast<double>(j);
    switch (u_kind) {
      case UKind::ones: return 1.0;
      case UKind::monotone: return 1.0 + u_param * x / (x + 1024.0);
      case UKind::oscillating: return 1.0 + u_param * std::cos(x) / std::sqrt(1.0 + x);
    }
    return 1.0;
  }

  // Per-plane energy alpha_k = ||(v_{2k}, v_{2k+1})||.
  std::vector<double> alpha() const {
    std::vector<double> a(v.size() / 2);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::hypot(v[2 * k], v[2 * k + 1]);
    return a;
  }

  double max_alpha() const {
    const auto a = alpha();
    return *std::max_element(a.begin(), a.end());
  }

  void validate() const {
    if (v.empty() || v.size() % 2 != 0) throw std::invalid_argument("RankOneSpec: v must have even length");
    double s = 0.0;
    for (double x : v) s += x * x;
    if (std::abs(std::sqrt(s) - 1.0) > 1e-10) throw std::invalid_argument("RankOneSpec: v must be a unit vector");
    if (n_grid.empty()) throw std::invalid_argument("RankOneSpec: empty n_grid");
    for (auto n : n_grid)
      if (n < 1) throw std::invalid_argument("RankOneSpec: sequence lengths must be >= 1");
    if (u_kind == UKind::oscillating && std::abs(u_param) >= 1.0)
      throw std::invalid_argument("RankOneSpec: oscillation amplitude must be < 1");
    if (u_kind == UKind::monotone && u_param <= -1.0)
      throw std::invalid_argument("RankOneSpec: monotone slope must exceed -1");
  }
};

inline std::vector<double> single_plane_v(std::size_t d, std::size_t plane = 0) {
  std::vector<double> v(d, 0.0);
  v.at(2 * plane) = 1.0;
  return v;
}

inline std::vector<double> uniform_v(std::size_t d) {
  return std::vector<double>(d, 1.0 / std::sqrt(static_cast<double>(d)));
}

struct RankOnePoint {
  std::int64_t n = 0;
  SpectralSummary pre;
  SpectralSummary post;

  double fsv_ratio() const { return post.spectral_norm / pre.spectral_norm; }
  double srank_ratio() const { return post.stable_rank / pre.stable_rank; }
  double frobenius_deviation() const {
    return std::abs(post.frobenius_norm - pre.frobenius_norm) / pre.frobenius_norm;
  }
};

// Spectra of X = u v^T (positions 0..n-1) before and after rotation, for
// every n in the grid. Rows are generated and folded into the Gram matrices
// on the fly, so memory is O(d^2) for any n; the grid is swept in one pass.
inline std::vector<RankOnePoint> rank_one_curve(const RankOneSpec& spec, const FrequencySchedule& schedule) {
  spec.validate();
  const std::size_t d = spec.v.size();
  if (schedule.head_dim() != d) throw std::invalid_argument("rank_one_curve: schedule head_dim mismatch");

  std::vector<std::int64_t> grid = spec.n_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  GramAccumulator post(d);
  double u_sq_sum = 0.0;
  std::vector<double> row(d);
  std::vector<RankOnePoint> out;
  out.reserve(grid.size());
  std::int64_t j = 0;
  for (std::int64_t n : grid) {
    for (; j < n; ++j) {
      const double uj = spec.u(j);
      u_sq_sum += uj * uj;
      rotation_at(schedule, j).apply(spec.v, row);
      post.add_row(row, uj * uj);
    }
    // Pre-rotation Gram of a rank-1 cloud is (sum u_j^2) v v^T.
    Matrix pre_gram(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) pre_gram(a, b) = u_sq_sum * spec.v[a] * spec.v[b];
    RankOnePoint p;
    p.n = n;
    p.pre = summarize_gram_eigenvalues(jacobi_eigen(std::move(pre_gram)).values);
    p.post = post.summary();
    out.push_back(std::move(p));
  }
  return out;
}

struct ConvergencePoint {
  std::int64_t n = 0;
  double measured = 0.0;
  double predicted = 0.0;
  double gap = 0.0;           // |measured - predicted|
  double relative_gap = 0.0;  // gap / predicted
  double duality_error = 0.0;  // |srank_ratio * fsv_ratio^2 - 1|
};

struct ConvergenceReport {
  std::string quantity;  // "fsv_ratio" or "srank_ratio"
  double max_alpha = 0.0;
  double tolerance = 0.0;  // relative
  std::vector<ConvergencePoint> points;
  bool within_bounds = true;
  bool asymptotic_checked = false;
  bool converged = true;
  bool tail_monotone = true;
  bool duality_ok = true;
  double max_duality_error = 0.0;

  bool passed() const { return within_bounds && converged && tail_monotone && duality_ok; }
};

// The asymptotic check only runs once the grid reaches this length.
inline constexpr std::int64_t kAsymptoticMinN = 4096;
inline constexpr double kStrictTolerance = 0.05;
inline constexpr double kLooseTolerance = 0.10;
inline constexpr double kDualityTolerance = 1e-6;

namespace detail {

inline ConvergenceReport convergence(const RankOneSpec& spec, const FrequencySchedule& schedule,
                                     bool stable_rank, double tolerance) {
  spec.validate();
  if (schedule.rotated_planes() != schedule.planes())
    throw std::invalid_argument("convergence check requires a schedule that rotates every plane");
  const auto curve = rank_one_curve(spec, schedule);

  ConvergenceReport r;
  r.quantity = stable_rank ? "srank_ratio" : "fsv_ratio";
  r.max_alpha = spec.max_alpha();
  r.tolerance = tolerance;
  const double predicted = stable_rank ? 2.0 / (r.max_alpha * r.max_alpha) : r.max_alpha / std::sqrt(2.0);

  for (const auto& p : curve) {
    ConvergencePoint c;
    c.n = p.n;
    c.measured = stable_rank ? p.srank_ratio() : p.fsv_ratio();
    c.predicted = predicted;
    c.gap = std::abs(c.measured - predicted);
    c.relative_gap = c.gap / predicted;
    c.duality_error = std::abs(p.srank_ratio() * p.fsv_ratio() * p.fsv_ratio() - 1.0);
    r.max_duality_error = std::max(r.max_duality_error, c.duality_error);
    if (stable_rank) {
      if (c.measured < 1.0 - 1e-9 || c.measured > predicted * (1.0 + tolerance)) r.within_bounds = false;
    } else {
      if (c.measured > 1.0 + 1e-9 || c.measured < predicted * (1.0 - tolerance)) r.within_bounds = false;
    }
    r.points.push_back(c);
  }
  r.duality_ok = r.max_duality_error <= kDualityTolerance;

  if (r.points.back().n >= kAsymptoticMinN) {
    r.asymptotic_checked = true;
    r.converged = r.points.back().relative_gap <= tolerance;
    const std::size_t tail = r.points.size() / 2;
    for (std::size_t i = tail; i + 1 < r.points.size(); ++i)
      if (r.points[i + 1].relative_gap > 1.1 * r.points[i].relative_gap + 1e-3) r.tail_monotone = false;
  }
  return r;
}

}  // namespace detail

// FSV ratio of a rotated rank-1 cloud against (1/sqrt 2) max_k alpha_k.
inline ConvergenceReport verify_lemma1(const RankOneSpec& spec, const FrequencySchedule& schedule,
                                       double tolerance = kStrictTolerance) {
  return detail::convergence(spec, schedule, false, tolerance);
}

// Stable-rank ratio of a rotated rank-1 cloud against 2 / max_k alpha_k^2.
inline ConvergenceReport verify_theorem1(const RankOneSpec& spec, const FrequencySchedule& schedule,
                                         double tolerance = kStrictTolerance) {
  return detail::convergence(spec, schedule, true, tolerance);
}

// Relative Frobenius change under rotation; zero up to rounding for any cloud.
inline double verify_lemma2(const LatentCloud& cloud, const FrequencySchedule& schedule) {
  const LatentCloud rotated = apply_rope(cloud, schedule);
  double pre = 0.0;
  double post = 0.0;
  for (double x : cloud.data().data()) pre += x * x;
  for (double x : rotated.data().data()) post += x * x;
  if (!(pre > 0.0)) throw std::invalid_argument("verify_lemma2: zero cloud");
  return std::abs(std::sqrt(post) - std::sqrt(pre)) / std::sqrt(pre);
}

// --- Synthetic method comparison on a ones cloud ---------------------------

struct Fig7Row {
  std::string variant;
  std::int64_t n = 0;
  double fsv_ratio = 0.0;
  double srank_pre = 0.0;
  double srank_post = 0.0;
};

// C1: the FSV ratio keeps a nontrivial floor at the longest length.
// C2: that floor is already reached at the training length.
struct Fig7Verdict {
  std::string variant;
  bool available = false;  // the grid contains both train_len and a longer n
  double ratio_at_train = 0.0;
  double ratio_at_max = 0.0;
  bool c1 = false;
  bool c2 = false;
};

struct Fig7Result {
  std::size_t head_dim = 0;
  std::int64_t train_len = 0;
  std::vector<Fig7Row> rows;
  std::vector<Fig7Verdict> verdicts;
};

inline constexpr double kFig7FloorC1 = 0.5;
inline constexpr double kFig7DriftC2 = 0.02;

inline std::vector<RopeVariantConfig> fig7_preset_variants(std::int64_t train_len = 4096) {
  return {StandardConfig{500000.0}, HighFrequencyConfig{train_len, std::nullopt}, PartialConfig{500000.0, 0.5},
          RopeIdConfig{train_len, 32, 2, 0.5}};
}

inline std::vector<std::int64_t> fig7_preset_grid() {
  std::vector<std::int64_t> g;
  for (std::int64_t n = 256; n <= 262144; n *= 2) g.push_back(n);
  return g;
}

// X = 1_n (1/sqrt d) 1_d^T pushed through each variant's schedule.
inline Fig7Result synth_fig7(std::size_t head_dim, std::int64_t train_len, const std::vector<std::int64_t>& n_grid,
                             const std::vector<RopeVariantConfig>& variants) {
  if (n_grid.empty()) throw std::invalid_argument("synth_fig7: empty n_grid");
  Fig7Result res;
  res.head_dim = head_dim;
  res.train_len = train_len;
  RankOneSpec spec;
  spec.v = uniform_v(head_dim);
  spec.n_grid = n_grid;
  for (const auto& variant : variants) {
    const auto schedule = build_schedule(variant, head_dim);
    const auto curve = rank_one_curve(spec, schedule);
    const std::string name = variant_name(variant);
    Fig7Verdict v;
    v.variant = name;
    std::optional<double> at_train;
    for (const auto& p : curve) {
      res.rows.push_back({name, p.n, p.fsv_ratio(), p.pre.stable_rank, p.post.stable_rank});
      if (p.n == train_len) at_train = p.fsv_ratio();
    }
    if (at_train && curve.back().n > train_len) {
      v.available = true;
      v.ratio_at_train = *at_train;
      v.ratio_at_max = curve.back().fsv_ratio();
      v.c1 = v.ratio_at_max >= kFig7FloorC1;
      v.c2 = std::abs(v.ratio_at_max - v.ratio_at_train) <= kFig7DriftC2 * v.ratio_at_train;
    }
    res.verdicts.push_back(v);
  }
  return res;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_THEORY_HPP
