// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_ATTENTION_HPP
#define ROPEGEOM_ATTENTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ropegeom/cloud.hpp"
#include "ropegeom/rotation.hpp"
#include "ropegeom/schedule.hpp"

namespace ropegeom {

struct AttentionConfig {
  std::size_t head_dim = 0;
  std::size_t n_query_heads = 1;
  std::size_t n_kv_heads = 1;
  std::int64_t train_len = 4096;
  bool temperature_scaling = false;
  double scale_coefficient = 0.1;
  double scale_exponent = 2.0;

  void validate() const {
    if (n_kv_heads == 0 || n_query_heads == 0 || n_query_heads % n_kv_heads != 0)
      throw std::invalid_argument("AttentionConfig: n_query_heads must be a multiple of n_kv_heads");
    if (train_len < 1) throw std::invalid_argument("AttentionConfig: train_len must be >= 1");
  }
  std::size_t group_size() const { return n_query_heads / n_kv_heads; }
};

// Length-dependent logit temperature, (1 + c * ln(max(n, L) / L))^e.
// Exactly 1 up to the training length.
inline double temperature_factor(std::int64_t n, const AttentionConfig& config) {
  if (n < 1) throw std::invalid_argument("temperature_factor: n must be >= 1");
  const double len = static_cast<double>(std::max(n, config.train_len));
  const double ratio = len / static_cast<double>(config.train_len);
  return std::pow(1.0 + config.scale_coefficient * std::log(ratio), config.scale_exponent);
}

// Numerically stable softmax in place; empty input is left alone.
inline void softmax_inplace(std::span<double> logits) {
  if (logits.empty()) return;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& x : logits) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : logits) x /= sum;
}

// One probability row per query, over key positions visible to it.
class AttentionWeights {
 public:
  struct Row {
    std::int64_t query_position;
    std::vector<double> weights;  // aligned with key_positions() prefix
  };

  AttentionWeights(std::vector<std::int64_t> key_positions, std::vector<Row> rows)
      : key_positions_(std::move(key_positions)), rows_(std::move(rows)) {}

  std::size_t size() const noexcept { return rows_.size(); }
  const Row& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  const std::vector<std::int64_t>& key_positions() const noexcept { return key_positions_; }

  // Weight of query row i on key position p; 0 when p is not visible.
  double weight(std::size_t i, std::int64_t p) const {
    const auto& r = rows_.at(i);
    auto it = std::lower_bound(key_positions_.begin(), key_positions_.end(), p);
    if (it == key_positions_.end() || *it != p) return 0.0;
    const auto idx = static_cast<std::size_t>(it - key_positions_.begin());
    return idx < r.weights.size() ? r.weights[idx] : 0.0;
  }

 private:
  std::vector<std::int64_t> key_positions_;
  std::vector<Row> rows_;
};

struct AttentionRowView {
  std::size_t query_index;
  std::int64_t query_position;
  std::span<const double> logits;   // raw rotated dot products, before scaling
  std::span<const double> weights;  // softmax of scaled logits
};

namespace detail {

inline std::vector<std::size_t> visible_counts(const LatentCloud& queries, const LatentCloud& keys) {
  if (queries.dim() != keys.dim())
    throw std::invalid_argument("attend: query and key dimensions differ");
  const auto& kp = keys.positions();
  std::vector<std::size_t> counts(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const std::int64_t p = queries.positions()[i];
    auto it = std::upper_bound(kp.begin(), kp.end(), p);
    if (it == kp.begin() || *(it - 1) != p)
      throw std::invalid_argument("attend: query position has no key at the same position");
    counts[i] = static_cast<std::size_t>(it - kp.begin());
  }
  return counts;
}

}  // namespace detail

// Streams causal attention one query row at a time. The clouds are used as
// given (already rotated, or never rotated); logits are plain dot products.
// Rows are never stored, so windows of tens of thousands of tokens fit in
// O(n) memory.
inline void for_each_attention_row(const LatentCloud& queries, const LatentCloud& keys,
                                   const AttentionConfig& config,
                                   const std::function<void(const AttentionRowView&)>& visit) {
  config.validate();
  const auto counts = detail::visible_counts(queries, keys);
  const double temperature =
      config.temperature_scaling ? temperature_factor(static_cast<std::int64_t>(keys.size()), config) : 1.0;
  const double scale = temperature / std::sqrt(static_cast<double>(queries.dim()));
  std::vector<double> logits;
  std::vector<double> weights;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const std::size_t m = counts[i];
    logits.resize(m);
    weights.resize(m);
    auto q = queries.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      logits[j] = dot(q, keys.row(j));
      weights[j] = scale * logits[j];
    }
    softmax_inplace(weights);
    visit(AttentionRowView{i, queries.positions()[i], logits, weights});
  }
}

inline AttentionWeights attend(const LatentCloud& queries, const LatentCloud& keys,
                               const AttentionConfig& config) {
  std::vector<AttentionWeights::Row> rows;
  rows.reserve(queries.size());
  for_each_attention_row(queries, keys, config, [&](const AttentionRowView& r) {
    rows.push_back({r.query_position, std::vector<double>(r.weights.begin(), r.weights.end())});
  });
  return AttentionWeights(keys.positions(), std::move(rows));
}

// Rotated attention: logits are relative_dot(q_i, k_j, i, j). Computed by
// rotating both clouds once, which is the same quantity.
inline AttentionWeights attend(const LatentCloud& queries, const LatentCloud& keys,
                               const AttentionConfig& config, const FrequencySchedule& schedule) {
  return attend(apply_rope(queries, schedule), apply_rope(keys, schedule), config);
}

// Grouped-query attention: query head h reads kv head h / group_size.
inline std::vector<AttentionWeights> attend_grouped(std::span<const LatentCloud> query_heads,
                                                    std::span<const LatentCloud> kv_heads,
                                                    const AttentionConfig& config,
                                                    const FrequencySchedule* schedule = nullptr) {
  config.validate();
  if (query_heads.size() != config.n_query_heads || kv_heads.size() != config.n_kv_heads)
    throw std::invalid_argument("attend_grouped: head counts do not match config");
  std::vector<LatentCloud> rotated_keys;
  rotated_keys.reserve(kv_heads.size());
  for (const auto& k : kv_heads) rotated_keys.push_back(schedule ? apply_rope(k, *schedule) : k);
  std::vector<AttentionWeights> out;
  out.reserve(query_heads.size());
  for (std::size_t h = 0; h < query_heads.size(); ++h) {
    const auto& keys = rotated_keys[h / config.group_size()];
    out.push_back(schedule ? attend(apply_rope(query_heads[h], *schedule), keys, config)
                           : attend(query_heads[h], keys, config));
  }
  return out;
}

// Half-open range of query row indices.
struct QueryRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Mean weight on key position 0 over the selected rows. By default every row
// whose query position is >= 1 (row 0 can only see the sink).
inline double sink_share(const AttentionWeights& weights, std::optional<QueryRange> range = std::nullopt) {
  if (weights.size() == 0) throw std::invalid_argument("sink_share: no attention rows");
  std::size_t b = 0;
  std::size_t e = weights.size();
  if (range) {
    if (range->begin >= range->end || range->end > weights.size())
      throw std::invalid_argument("sink_share: empty or out-of-range query range");
    b = range->begin;
    e = range->end;
  } else {
    while (b < e && weights.row(b).query_position < 1) ++b;
    if (b == e) b = 0;
  }
  double s = 0.0;
  for (std::size_t i = b; i < e; ++i) s += weights.weight(i, 0);
  return s / static_cast<double>(e - b);
}

}  // namespace ropegeom

#endif  // ROPEGEOM_ATTENTION_HPP
