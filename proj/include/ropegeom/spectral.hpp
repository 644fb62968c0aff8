// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_SPECTRAL_HPP
#define ROPEGEOM_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "ropegeom/cloud.hpp"
#include "ropegeom/matrix.hpp"
#include "ropegeom/rotation.hpp"
#include "ropegeom/schedule.hpp"

namespace ropegeom {

struct SymmetricEigen {
  std::vector<double> values;  // non-increasing
  Matrix vectors;              // column i pairs with values[i]
  int sweeps = 0;
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Stops when the
// off-diagonal Frobenius mass drops below tol_rel * ||A||_F or after
// max_sweeps full sweeps.
inline SymmetricEigen jacobi_eigen(Matrix a, double tol_rel = 1e-12, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("jacobi_eigen: matrix must be square");
  Matrix v = Matrix::identity(n);

  double total = 0.0;
  for (double x : a.data()) total += x * x;
  const double threshold = tol_rel * std::sqrt(total);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q)
      if (std::abs(a(p, q) - a(q, p)) > threshold) throw std::invalid_argument("jacobi_eigen: matrix is not symmetric");

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rutishauser's formulation: t = tan of the rotation angle.
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = arp - s * (arq + tau * arp);
          a(p, r) = a(r, p);
          a(r, q) = arq + s * (arp - tau * arq);
          a(q, r) = a(r, q);
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  out.sweeps = sweep;
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = a(order[i], order[i]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, i) = v(r, order[i]);
  }
  return out;
}

struct SpectralSummary {
  std::vector<double> singular_values;  // non-increasing, length d
  double spectral_norm = 0.0;
  double frobenius_norm = 0.0;
  double stable_rank = 0.0;
  double fsv_variance_fraction = 0.0;
  std::size_t numeric_rank = 0;
};

// Eigenvalues of X^T X below this fraction of the largest are not resolved by
// the Gram path and are reported as exact zeros.
inline double gram_noise_floor(std::size_t d) {
  return 64.0 * static_cast<double>(d) * std::numeric_limits<double>::epsilon();
}

inline SpectralSummary summarize_gram_eigenvalues(std::vector<double> eig) {
  if (eig.empty()) throw std::invalid_argument("spectral summary: empty spectrum");
  std::sort(eig.begin(), eig.end(), std::greater<>());
  const double top = eig.front();
  if (!(top > 0.0)) throw std::invalid_argument("spectral summary: zero matrix");
  const double floor = gram_noise_floor(eig.size()) * top;
  SpectralSummary s;
  s.singular_values.resize(eig.size());
  double trace = 0.0;
  for (std::size_t i = 0; i < eig.size(); ++i) {
    const double lam = eig[i] > floor ? eig[i] : 0.0;
    s.singular_values[i] = std::sqrt(lam);
    trace += lam;
    if (lam > 0.0) ++s.numeric_rank;
  }
  s.spectral_norm = s.singular_values.front();
  s.frobenius_norm = std::sqrt(trace);
  s.stable_rank = trace / top;
  s.fsv_variance_fraction = top / trace;
  return s;
}

// Streams rows into the upper triangle of X^T X. O(d^2) state regardless of n.
class GramAccumulator {
 public:
  explicit GramAccumulator(std::size_t dim) : dim_(dim), upper_(dim * dim, 0.0) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return rows_; }

  void add_row(std::span<const double> x, double weight = 1.0) {
    if (x.size() != dim_) throw std::invalid_argument("GramAccumulator: row dimension mismatch");
    for (std::size_t a = 0; a < dim_; ++a) {
      const double xa = weight * x[a];
      if (xa == 0.0) continue;
      double* g = upper_.data() + a * dim_;
      for (std::size_t b = a; b < dim_; ++b) g[b] += xa * x[b];
    }
    ++rows_;
  }

  Matrix gram() const {
    Matrix g(dim_, dim_);
    for (std::size_t a = 0; a < dim_; ++a)
      for (std::size_t b = a; b < dim_; ++b) {
        g(a, b) = upper_[a * dim_ + b];
        g(b, a) = upper_[a * dim_ + b];
      }
    return g;
  }

  SpectralSummary summary() const {
    for (double x : upper_)
      if (!std::isfinite(x)) throw std::invalid_argument("spectral summary: non-finite entries");
    return summarize_gram_eigenvalues(jacobi_eigen(gram()).values);
  }

 private:
  std::size_t dim_;
  std::vector<double> upper_;
  std::size_t rows_ = 0;
};

inline SpectralSummary spectral_summary(const LatentCloud& cloud) {
  GramAccumulator acc(cloud.dim());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (double x : cloud.row(i))
      if (!std::isfinite(x)) throw std::invalid_argument("spectral_summary: non-finite entries");
    acc.add_row(cloud.row(i));
  }
  return acc.summary();
}

namespace detail {

struct PrePost {
  SpectralSummary pre;
  SpectralSummary post;
};

inline PrePost pre_post_spectra(const LatentCloud& cloud, const FrequencySchedule& schedule) {
  if (cloud.dim() != schedule.head_dim())
    throw std::invalid_argument("spectral ratio: cloud dimension does not match schedule");
  GramAccumulator pre(cloud.dim());
  GramAccumulator post(cloud.dim());
  std::vector<double> rotated(cloud.dim());
  bool nonzero = false;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto x = cloud.row(i);
    for (double e : x) {
      if (!std::isfinite(e)) throw std::invalid_argument("spectral ratio: non-finite entries");
      nonzero = nonzero || e != 0.0;
    }
    pre.add_row(x);
    rotation_at(schedule, cloud.positions()[i]).apply(x, rotated);
    post.add_row(rotated);
  }
  if (!nonzero) throw std::invalid_argument("spectral ratio: zero matrix");
  return {pre.summary(), post.summary()};
}

}  // namespace detail

// ||R(X)||_2 / ||X||_2.
inline double fsv_ratio(const LatentCloud& cloud, const FrequencySchedule& schedule) {
  const auto s = detail::pre_post_spectra(cloud, schedule);
  return s.post.spectral_norm / s.pre.spectral_norm;
}

// srank(R(X)) / srank(X).
inline double stable_rank_ratio(const LatentCloud& cloud, const FrequencySchedule& schedule) {
  const auto s = detail::pre_post_spectra(cloud, schedule);
  return s.post.stable_rank / s.pre.stable_rank;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_SPECTRAL_HPP
