// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_CLOUD_HPP
#define ROPEGEOM_CLOUD_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ropegeom/matrix.hpp"

namespace ropegeom {

enum class Role : std::uint32_t { key = 0, query = 1 };
enum class RopePhase : std::uint32_t { pre_rope = 0, post_rope = 1 };

inline const char* to_string(Role r) { return r == Role::key ? "key" : "query"; }
inline const char* to_string(RopePhase p) {
  return p == RopePhase::pre_rope ? "pre_rope" : "post_rope";
}

struct CloudMeta {
  std::string model;
  std::uint32_t layer = 0;
  std::uint32_t head = 0;
  Role role = Role::key;
  RopePhase phase = RopePhase::pre_rope;

  friend bool operator==(const CloudMeta&, const CloudMeta&) = default;
};

// n x d matrix of key or query vectors. Row i is the vector observed at token
// position positions()[i]. Invariants: n >= 1, d even, positions strictly
// increasing.
class LatentCloud {
 public:
  explicit LatentCloud(Matrix data, CloudMeta meta = {})
      : data_(std::move(data)), positions_(data_.rows()), meta_(std::move(meta)) {
    std::iota(positions_.begin(), positions_.end(), std::int64_t{0});
    validate();
  }

  LatentCloud(Matrix data, std::vector<std::int64_t> positions, CloudMeta meta = {})
      : data_(std::move(data)), positions_(std::move(positions)), meta_(std::move(meta)) {
    validate();
  }

  std::size_t size() const noexcept { return data_.rows(); }
  std::size_t dim() const noexcept { return data_.cols(); }

  const Matrix& data() const noexcept { return data_; }
  const std::vector<std::int64_t>& positions() const noexcept { return positions_; }
  const CloudMeta& meta() const noexcept { return meta_; }
  CloudMeta& meta() noexcept { return meta_; }

  std::span<const double> row(std::size_t i) const noexcept { return data_.row(i); }

  // Rows whose position is < limit. Positions are sorted, so this is a prefix.
  LatentCloud truncated(std::int64_t limit) const {
    std::size_t n = 0;
    while (n < positions_.size() && positions_[n] < limit) ++n;
    if (n == 0) throw std::invalid_argument("LatentCloud::truncated: empty window");
    std::vector<double> buf(data_.data().begin(),
                            data_.data().begin() + static_cast<std::ptrdiff_t>(n * dim()));
    return LatentCloud(Matrix(n, dim(), std::move(buf)),
                       std::vector<std::int64_t>(positions_.begin(), positions_.begin() + static_cast<std::ptrdiff_t>(n)),
                       meta_);
  }

 private:
  void validate() const {
    if (data_.rows() == 0) throw std::invalid_argument("LatentCloud: n must be >= 1");
    if (data_.cols() == 0 || data_.cols() % 2 != 0)
      throw std::invalid_argument("LatentCloud: head dimension must be even and positive");
    if (positions_.size() != data_.rows())
      throw std::invalid_argument("LatentCloud: positions length does not match rows");
    if (positions_.front() < 0) throw std::invalid_argument("LatentCloud: negative position");
    for (std::size_t i = 1; i < positions_.size(); ++i)
      if (positions_[i] <= positions_[i - 1])
        throw std::invalid_argument("LatentCloud: positions must be strictly increasing");
  }

  Matrix data_;
  std::vector<std::int64_t> positions_;
  CloudMeta meta_;
};

}  // namespace ropegeom

#endif  // ROPEGEOM_CLOUD_HPP
