// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_TESTS_SUPPORT_HPP
#define ROPEGEOM_TESTS_SUPPORT_HPP

// Independent reference computations for the test suites. Nothing here calls
// into the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Neumaier compensated sum.
inline double compensated_sum(const std::vector<double>& xs) {
  double s = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

inline Dense multiply(const Dense& a, const Dense& b) {
  Dense out = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

// Block-diagonal rotation built straight from angles: plane k gets angle
// m * theta[k] when k < rotated, the identity otherwise.
inline Dense rotation_matrix(const std::vector<double>& theta, std::size_t rotated, std::int64_t m) {
  const std::size_t d = 2 * theta.size();
  Dense r = zeros(d, d);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double a = k < rotated ? static_cast<double>(m) * theta[k] : 0.0;
    r[2 * k][2 * k] = std::cos(a);
    r[2 * k][2 * k + 1] = -std::sin(a);
    r[2 * k + 1][2 * k] = std::sin(a);
    r[2 * k + 1][2 * k + 1] = std::cos(a);
  }
  return r;
}

inline std::vector<double> mat_vec(const Dense& a, const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

inline double inner(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

// Singular values by power iteration on A^T A with deflation, computed on the
// raw matrix without any symmetric eigensolver.
inline std::vector<double> singular_values_power(const Dense& a, int iterations = 5000) {
  const std::size_t n = a.size();
  const std::size_t d = a[0].size();
  Dense g = zeros(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = 0; q < d; ++q) g[p][q] += a[i][p] * a[i][q];
  std::vector<double> out;
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  for (std::size_t s = 0; s < d; ++s) {
    std::vector<double> v(d);
    for (double& x : v) x = nd(gen);
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
      auto w = mat_vec(g, v);
      const double norm = std::sqrt(inner(w, w));
      if (norm == 0.0) break;
      for (std::size_t k = 0; k < d; ++k) v[k] = w[k] / norm;
      const double next = inner(v, mat_vec(g, v));
      if (it > 50 && std::abs(next - lambda) <= 1e-15 * std::abs(next)) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    out.push_back(std::sqrt(std::max(lambda, 0.0)));
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = 0; q < d; ++q) g[p][q] -= lambda * v[p] * v[q];
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

// Softmax in long double.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  long double mx = logits[0];
  for (double x : logits) mx = std::max<long double>(mx, x);
  long double s = 0.0L;
  std::vector<long double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) s += e[i] = std::exp(static_cast<long double>(logits[i]) - mx);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(e[i] / s);
  return out;
}

}  // namespace oracle

namespace testing_support {

// Fresh empty directory under the system temp dir, unique per test name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ropegeom_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support

#endif  // ROPEGEOM_TESTS_SUPPORT_HPP
