// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_ROTATION_HPP
#define ROPEGEOM_ROTATION_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ropegeom/cloud.hpp"
#include "ropegeom/matrix.hpp"
#include "ropegeom/schedule.hpp"

namespace ropegeom {

// Block-diagonal rotation R^m: plane k (channels 2k, 2k+1) is turned by
// m * theta_k; non-rotated planes are the identity. Stored as per-plane
// (cos, sin) so it can be applied without forming the d x d matrix.
class BlockRotation {
 public:
  BlockRotation(const FrequencySchedule& schedule, std::int64_t position)
      : cos_(schedule.planes(), 1.0), sin_(schedule.planes(), 0.0),
        rotated_(schedule.rotated_planes()) {
    if (position < 0) throw std::invalid_argument("rotation_at: position must be >= 0");
    const double m = static_cast<double>(position);
    for (std::size_t k = 0; k < rotated_; ++k) {
      const double angle = m * schedule.frequency(k);
      cos_[k] = std::cos(angle);
      sin_[k] = std::sin(angle);
    }
  }

  std::size_t dim() const noexcept { return 2 * cos_.size(); }

  // out = R^m x. Identity planes are copied untouched.
  void apply(std::span<const double> x, std::span<double> out) const {
    if (x.size() != dim() || out.size() != dim())
      throw std::invalid_argument("BlockRotation::apply: dimension mismatch");
    for (std::size_t k = 0; k < cos_.size(); ++k) {
      const double a = x[2 * k];
      const double b = x[2 * k + 1];
      if (k < rotated_) {
        out[2 * k] = cos_[k] * a - sin_[k] * b;
        out[2 * k + 1] = sin_[k] * a + cos_[k] * b;
      } else {
        out[2 * k] = a;
        out[2 * k + 1] = b;
      }
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.size());
    apply(x, out);
    return out;
  }

  Matrix to_matrix() const {
    Matrix r(dim(), dim());
    for (std::size_t k = 0; k < cos_.size(); ++k) {
      r(2 * k, 2 * k) = cos_[k];
      r(2 * k, 2 * k + 1) = -sin_[k];
      r(2 * k + 1, 2 * k) = sin_[k];
      r(2 * k + 1, 2 * k + 1) = cos_[k];
    }
    return r;
  }

 private:
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::size_t rotated_;
};

inline BlockRotation rotation_at(const FrequencySchedule& schedule, std::int64_t position) {
  return BlockRotation(schedule, position);
}

inline LatentCloud apply_rope(const LatentCloud& cloud, const FrequencySchedule& schedule) {
  if (cloud.dim() != schedule.head_dim())
    throw std::invalid_argument("apply_rope: cloud dimension does not match schedule head_dim");
  Matrix out(cloud.size(), cloud.dim());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    rotation_at(schedule, cloud.positions()[i]).apply(cloud.row(i), out.row(i));
  CloudMeta meta = cloud.meta();
  meta.phase = RopePhase::post_rope;
  return LatentCloud(std::move(out), cloud.positions(), std::move(meta));
}

// <r(q, i), r(k, j)>: the rotated logit between a query at position i and a
// key at position j. Only the displacement matters, so k is rotated by j - i
// and dotted with the unrotated q (q^T R^(j-i) k in column form).
inline double relative_dot(std::span<const double> q, std::span<const double> k, std::int64_t i,
                           std::int64_t j, const FrequencySchedule& schedule) {
  if (q.size() != k.size() || q.size() != schedule.head_dim())
    throw std::invalid_argument("relative_dot: dimension mismatch");
  if (i < 0 || j < 0) throw std::invalid_argument("relative_dot: negative position");
  const double delta = static_cast<double>(j - i);
  double s = 0.0;
  for (std::size_t p = 0; p < schedule.planes(); ++p) {
    const double a = k[2 * p];
    const double b = k[2 * p + 1];
    if (schedule.rotates(p)) {
      const double angle = delta * schedule.frequency(p);
      const double c = std::cos(angle);
      const double sn = std::sin(angle);
      s += q[2 * p] * (c * a - sn * b) + q[2 * p + 1] * (sn * a + c * b);
    } else {
      s += q[2 * p] * a + q[2 * p + 1] * b;
    }
  }
  return s;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_ROTATION_HPP
