// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_PCA_HPP
#define ROPEGEOM_PCA_HPP

#include <stdexcept>
#include <vector>

#include "ropegeom/cloud.hpp"
#include "ropegeom/matrix.hpp"
#include "ropegeom/spectral.hpp"

namespace ropegeom {

struct PcaSnapshot {
  Matrix basis;      // d x 2, orthonormal columns
  Matrix projected;  // n x 2
  double explained_fraction = 0.0;  // of the reference cloud
};

struct PcaOptions {
  // Variance is measured about the origin unless centered is set, in which
  // case the reference mean is removed from the reference and every target.
  bool centered = false;
};

// Fixes a 2D projection from the reference cloud (top-2 right singular
// vectors) and pushes every target through that same basis.
inline std::vector<PcaSnapshot> pca_snapshot(const LatentCloud& reference,
                                             const std::vector<LatentCloud>& targets,
                                             const PcaOptions& options = {}) {
  const std::size_t d = reference.dim();
  std::vector<double> mean(d, 0.0);
  if (options.centered) {
    for (std::size_t i = 0; i < reference.size(); ++i)
      for (std::size_t k = 0; k < d; ++k) mean[k] += reference.row(i)[k];
    for (double& m : mean) m /= static_cast<double>(reference.size());
  }

  GramAccumulator acc(d);
  std::vector<double> shifted(d);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) shifted[k] = reference.row(i)[k] - mean[k];
    acc.add_row(shifted);
  }
  const auto eig = jacobi_eigen(acc.gram());
  const double top = eig.values.front();
  const double floor = gram_noise_floor(d) * top;
  if (!(top > 0.0) || eig.values.size() < 2 || eig.values[1] <= floor)
    throw std::invalid_argument("pca_snapshot: reference cloud has rank < 2");

  double trace = 0.0;
  for (double v : eig.values) trace += v > floor ? v : 0.0;

  Matrix basis(d, 2);
  for (std::size_t k = 0; k < d; ++k) {
    basis(k, 0) = eig.vectors(k, 0);
    basis(k, 1) = eig.vectors(k, 1);
  }
  const double explained = (eig.values[0] + eig.values[1]) / trace;

  std::vector<PcaSnapshot> out;
  out.reserve(targets.size());
  for (const auto& t : targets) {
    if (t.dim() != d) throw std::invalid_argument("pca_snapshot: target dimension mismatch");
    Matrix proj(t.size(), 2);
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto x = t.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        const double v = x[k] - mean[k];
        proj(i, 0) += v * basis(k, 0);
        proj(i, 1) += v * basis(k, 1);
      }
    }
    out.push_back({basis, std::move(proj), explained});
  }
  return out;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_PCA_HPP
