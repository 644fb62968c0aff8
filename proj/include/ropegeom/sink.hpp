// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_SINK_HPP
#define ROPEGEOM_SINK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "ropegeom/attention.hpp"
#include "ropegeom/cloud.hpp"
#include "ropegeom/rotation.hpp"
#include "ropegeom/schedule.hpp"

namespace ropegeom {

struct SinkReport {
  std::vector<std::int64_t> key_positions;
  std::vector<double> key_norms;
  // Keys that have at least one strictly later query.
  std::vector<std::int64_t> scored_positions;
  std::vector<double> mean_key_scores;
  std::vector<double> normalized_key_scores;
  std::map<std::int64_t, double> sink_share_by_length;
  std::map<std::int64_t, double> max_qk_by_length;
};

// Scale mean key scores so the best key reads 1. A non-positive maximum cannot
// be divided through without flipping the order, so those sets are shifted
// instead: 1 + (s - max) / max|s|.
inline std::vector<double> normalize_key_scores(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  const double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  if (mx > 0.0) {
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] / mx;
    return out;
  }
  double span = 0.0;
  for (double s : scores) span = std::max(span, std::abs(s));
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = span > 0.0 ? 1.0 + (scores[i] - mx) / span : 1.0;
  return out;
}

struct WindowSinkStats {
  double sink_share = 0.0;
  double max_qk = 0.0;
};

// Mean sink weight (rows at position >= 1) and mean per-row max logit for
// already-rotated (or never-rotated) clouds.
inline WindowSinkStats window_sink_stats(const LatentCloud& queries, const LatentCloud& keys,
                                         const AttentionConfig& config) {
  const bool has_sink = keys.positions().front() == 0;
  double share = 0.0;
  std::size_t share_rows = 0;
  double max_sum = 0.0;
  for_each_attention_row(queries, keys, config, [&](const AttentionRowView& r) {
    max_sum += *std::max_element(r.logits.begin(), r.logits.end());
    if (r.query_position >= 1) {
      share += has_sink ? r.weights[0] : 0.0;
      ++share_rows;
    }
  });
  WindowSinkStats s;
  s.sink_share = share_rows ? share / static_cast<double>(share_rows) : (has_sink ? 1.0 : 0.0);
  s.max_qk = max_sum / static_cast<double>(queries.size());
  return s;
}

// Key norms, per-key mean logit against later queries, and sink share / max
// logit for each window length. With a schedule, logits are rotated; without
// one, the clouds are used as given.
inline SinkReport sink_report(const LatentCloud& keys, const LatentCloud& queries,
                              const FrequencySchedule* schedule, const AttentionConfig& config,
                              const std::vector<std::int64_t>& lengths) {
  if (keys.dim() != queries.dim()) throw std::invalid_argument("sink_report: dimension mismatch");
  if (lengths.empty()) throw std::invalid_argument("sink_report: no window lengths");
  const std::int64_t longest = *std::max_element(lengths.begin(), lengths.end());
  if (*std::min_element(lengths.begin(), lengths.end()) < 1)
    throw std::invalid_argument("sink_report: window lengths must be positive");
  if (keys.positions().back() < longest - 1 || queries.positions().back() < longest - 1)
    throw std::invalid_argument("sink_report: window length exceeds available positions");

  const LatentCloud k_win = keys.truncated(longest);
  const LatentCloud q_win = queries.truncated(longest);
  const LatentCloud k_rot = schedule ? apply_rope(k_win, *schedule) : k_win;
  const LatentCloud q_rot = schedule ? apply_rope(q_win, *schedule) : q_win;

  SinkReport out;
  out.key_positions = k_win.positions();
  out.key_norms.resize(k_win.size());
  for (std::size_t i = 0; i < k_win.size(); ++i) out.key_norms[i] = norm2(k_win.row(i));

  // Suffix sums of rotated queries: the mean logit of key j against all
  // queries after it is <k_j, sum q_i> / count.
  const std::size_t d = q_rot.dim();
  const std::size_t nq = q_rot.size();
  std::vector<double> suffix((nq + 1) * d, 0.0);
  for (std::size_t i = nq; i-- > 0;)
    for (std::size_t c = 0; c < d; ++c) suffix[i * d + c] = suffix[(i + 1) * d + c] + q_rot.row(i)[c];

  const auto& qp = q_rot.positions();
  for (std::size_t j = 0; j < k_rot.size(); ++j) {
    const std::int64_t p = k_rot.positions()[j];
    const auto first = static_cast<std::size_t>(std::upper_bound(qp.begin(), qp.end(), p) - qp.begin());
    if (first == nq) continue;
    const std::span<const double> sum(suffix.data() + first * d, d);
    out.scored_positions.push_back(p);
    out.mean_key_scores.push_back(dot(k_rot.row(j), sum) / static_cast<double>(nq - first));
  }
  out.normalized_key_scores = normalize_key_scores(out.mean_key_scores);

  for (std::int64_t len : lengths) {
    const auto stats = window_sink_stats(q_rot.truncated(len), k_rot.truncated(len), config);
    out.sink_share_by_length[len] = stats.sink_share;
    out.max_qk_by_length[len] = stats.max_qk;
  }
  return out;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_SINK_HPP
