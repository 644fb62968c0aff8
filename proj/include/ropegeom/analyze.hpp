// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_ANALYZE_HPP
#define ROPEGEOM_ANALYZE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <exception>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ropegeom/attention.hpp"
#include "ropegeom/cluster.hpp"
#include "ropegeom/dump.hpp"
#include "ropegeom/manifest.hpp"
#include "ropegeom/rng.hpp"
#include "ropegeom/rotation.hpp"
#include "ropegeom/schedule.hpp"
#include "ropegeom/sink.hpp"
#include "ropegeom/spectral.hpp"

namespace ropegeom {

inline constexpr const char* kToolName = "ropegeom";
inline constexpr const char* kToolVersion = "0.1.0";

enum class Metric { cluster, spectral, sink };

inline Metric metric_from_string(const std::string& s) {
  if (s == "cluster") return Metric::cluster;
  if (s == "spectral") return Metric::spectral;
  if (s == "sink") return Metric::sink;
  throw std::invalid_argument("unknown metric: " + s);
}

inline std::vector<std::int64_t> default_lengths() { return {1024, 2048, 4096, 8192, 16384, 32768, 65536}; }

struct AnalyzeOptions {
  std::vector<std::int64_t> lengths = default_lengths();
  std::set<Metric> metrics = {Metric::cluster, Metric::spectral, Metric::sink};
  std::uint64_t seed = 0;
  std::size_t pair_budget = 200000;
  std::size_t threads = 1;
  bool temperature_scaling = false;
  std::optional<std::set<std::uint32_t>> layers;
  std::optional<std::set<std::uint32_t>> kv_heads;
};

// Formatting shared by every CSV: shortest round-trip text for doubles.
inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CellRow {
  std::uint32_t layer = 0;
  std::uint32_t kv_head = 0;
  std::int64_t length = 0;
  RopePhase phase = RopePhase::pre_rope;
  std::size_t n_keys = 0;
  std::size_t n_queries = 0;
  std::optional<ClusterStats> cluster;
  std::optional<SpectralSummary> key_spectrum;
  std::optional<SpectralSummary> query_spectrum;
  std::optional<double> sink_share;
  std::optional<double> max_other_key_share;
  std::optional<double> max_qk;
  std::string status = "ok";
};

struct ProfileRow {
  std::uint32_t layer = 0;
  std::uint32_t kv_head = 0;
  RopePhase phase = RopePhase::pre_rope;
  std::int64_t position = 0;
  double key_norm = 0.0;
  std::optional<double> mean_key_score;
  std::optional<double> normalized_key_score;
};

struct AnalyzeResult {
  std::vector<CellRow> cells;
  std::vector<ProfileRow> profile;
  std::string config_hash;
  std::uint64_t seed = 0;
};

namespace detail {

// Stack the clouds of one GQA group into a single point set. Positions are
// renumbered; callers only use this for position-free statistics.
inline LatentCloud stack_clouds(const std::vector<LatentCloud>& clouds) {
  const std::size_t d = clouds.front().dim();
  std::size_t n = 0;
  for (const auto& c : clouds) n += c.size();
  std::vector<double> buf;
  buf.reserve(n * d);
  for (const auto& c : clouds) buf.insert(buf.end(), c.data().data().begin(), c.data().data().end());
  CloudMeta meta = clouds.front().meta();
  return LatentCloud(Matrix(n, d, std::move(buf)), std::move(meta));
}

struct SinkWindow {
  double sink_share = 0.0;
  double max_other_share = 0.0;
  double max_qk = 0.0;
};

// Like window_sink_stats, also tracking the best non-sink key's mean weight
// over the rows that can see it.
inline SinkWindow sink_window(const LatentCloud& queries, const LatentCloud& keys, const AttentionConfig& cfg) {
  std::vector<double> key_sum(keys.size(), 0.0);
  std::vector<std::size_t> key_rows(keys.size(), 0);
  double share = 0.0;
  std::size_t rows = 0;
  double max_sum = 0.0;
  const bool has_sink = keys.positions().front() == 0;
  for_each_attention_row(queries, keys, cfg, [&](const AttentionRowView& r) {
    max_sum += *std::max_element(r.logits.begin(), r.logits.end());
    if (r.query_position < 1) return;
    ++rows;
    if (has_sink) share += r.weights[0];
    for (std::size_t j = 0; j < r.weights.size(); ++j) {
      key_sum[j] += r.weights[j];
      ++key_rows[j];
    }
  });
  SinkWindow w;
  w.sink_share = rows ? share / static_cast<double>(rows) : 0.0;
  for (std::size_t j = has_sink ? 1 : 0; j < keys.size(); ++j)
    if (key_rows[j]) w.max_other_share = std::max(w.max_other_share, key_sum[j] / static_cast<double>(key_rows[j]));
  w.max_qk = max_sum / static_cast<double>(queries.size());
  return w;
}

struct CellInput {
  std::uint32_t layer;
  std::uint32_t kv_head;
  LatentCloud keys;
  std::vector<LatentCloud> queries;
};

struct CellOutput {
  std::vector<CellRow> rows;
  std::vector<ProfileRow> profile;
};

inline CellOutput analyze_cell(const CellInput& in, RopePhase phase, const AnalyzeOptions& opt,
                               const AttentionConfig& attn) {
  CellOutput out;
  const std::int64_t longest = *std::max_element(opt.lengths.begin(), opt.lengths.end());
  for (std::int64_t len : opt.lengths) {
    CellRow row;
    row.layer = in.layer;
    row.kv_head = in.kv_head;
    row.length = len;
    row.phase = phase;
    try {
      const LatentCloud keys = in.keys.truncated(len);
      std::vector<LatentCloud> qs;
      for (const auto& q : in.queries) qs.push_back(q.truncated(len));
      const LatentCloud stacked = stack_clouds(qs);
      row.n_keys = keys.size();
      row.n_queries = stacked.size();
      if (opt.metrics.count(Metric::cluster)) {
        ClusterOptions co;
        co.pair_budget = opt.pair_budget;
        co.seed = derive_seed(opt.seed, {in.layer, in.kv_head, static_cast<std::uint64_t>(len),
                                         static_cast<std::uint64_t>(phase)});
        row.cluster = cluster_stats(keys, stacked, co);
      }
      if (opt.metrics.count(Metric::spectral)) {
        row.key_spectrum = spectral_summary(keys);
        row.query_spectrum = spectral_summary(stacked);
      }
      if (opt.metrics.count(Metric::sink)) {
        SinkWindow acc;
        for (const auto& q : qs) {
          const auto w = sink_window(q, keys, attn);
          acc.sink_share += w.sink_share;
          acc.max_other_share = std::max(acc.max_other_share, w.max_other_share);
          acc.max_qk += w.max_qk;
        }
        const double g = static_cast<double>(qs.size());
        row.sink_share = acc.sink_share / g;
        row.max_other_key_share = acc.max_other_share;
        row.max_qk = acc.max_qk / g;
      }
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
    out.rows.push_back(std::move(row));
  }

  if (opt.metrics.count(Metric::sink)) {
    try {
      const LatentCloud keys = in.keys.truncated(longest);
      std::vector<double> score_sum;
      std::vector<std::int64_t> scored;
      for (const auto& q : in.queries) {
        const auto rep = sink_report(keys, q.truncated(longest), nullptr, attn, {longest});
        if (score_sum.empty()) {
          score_sum.assign(rep.mean_key_scores.size(), 0.0);
          scored = rep.scored_positions;
        }
        for (std::size_t i = 0; i < score_sum.size(); ++i) score_sum[i] += rep.mean_key_scores[i];
      }
      for (double& s : score_sum) s /= static_cast<double>(in.queries.size());
      const auto normalized = normalize_key_scores(score_sum);
      std::map<std::int64_t, std::size_t> idx;
      for (std::size_t i = 0; i < scored.size(); ++i) idx[scored[i]] = i;
      for (std::size_t j = 0; j < keys.size(); ++j) {
        ProfileRow p;
        p.layer = in.layer;
        p.kv_head = in.kv_head;
        p.phase = phase;
        p.position = keys.positions()[j];
        p.key_norm = norm2(keys.row(j));
        if (auto it = idx.find(p.position); it != idx.end()) {
          p.mean_key_score = score_sum[it->second];
          p.normalized_key_score = normalized[it->second];
        }
        out.profile.push_back(p);
      }
    } catch (const std::exception&) {
      // cell rows already carry the failure
    }
  }
  return out;
}

inline void run_parallel(std::size_t tasks, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, tasks));
  if (threads == 1) {
    for (std::size_t i = 0; i < tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Canonical text of everything that determines the numbers in the outputs.
inline std::string analyze_config_string(const std::string& manifest_digest, const AnalyzeOptions& opt) {
  std::ostringstream s;
  s << "manifest=" << manifest_digest << ";lengths=";
  for (auto l : opt.lengths) s << l << ',';
  s << ";metrics=";
  for (auto m : opt.metrics) s << static_cast<int>(m) << ',';
  s << ";seed=" << opt.seed << ";pairs=" << opt.pair_budget << ";temp=" << opt.temperature_scaling;
  s << ";layers=";
  if (opt.layers)
    for (auto l : *opt.layers) s << l << ',';
  s << ";heads=";
  if (opt.kv_heads)
    for (auto h : *opt.kv_heads) s << h << ',';
  return s.str();
}

// Runs every (layer, kv_head) cell of a validated manifest, pre and post
// rotation. Post clouds come from post_rope dumps when the manifest has them;
// otherwise the manifest's rope variant is applied to the pre_rope dumps.
inline AnalyzeResult analyze_manifest(const std::filesystem::path& manifest_path, const AnalyzeOptions& opt) {
  if (opt.lengths.empty()) throw std::invalid_argument("analyze: no window lengths");
  if (opt.metrics.empty()) throw std::invalid_argument("analyze: no metrics selected");
  const Manifest m = load_manifest(manifest_path);
  if (m.n_kv_heads == 0 || m.n_query_heads % m.n_kv_heads != 0)
    throw ManifestError("manifest: n_query_heads must be a multiple of n_kv_heads");
  const auto base = manifest_path.parent_path();
  const auto schedule = build_schedule(m.rope_variant, m.head_dim);
  const std::size_t group = m.n_query_heads / m.n_kv_heads;

  AttentionConfig attn;
  attn.head_dim = m.head_dim;
  attn.train_len = static_cast<std::int64_t>(m.train_len);
  attn.temperature_scaling = opt.temperature_scaling;

  auto load = [&](std::uint32_t layer, std::uint32_t head, Role role, RopePhase phase) -> std::optional<LatentCloud> {
    const auto* e = m.find(layer, head, role, phase);
    if (!e) return std::nullopt;
    return read_dump(base / e->path);
  };

  struct Task {
    std::uint32_t layer;
    std::uint32_t kv_head;
  };
  std::vector<Task> tasks;
  const std::int64_t longest = *std::max_element(opt.lengths.begin(), opt.lengths.end());
  for (std::uint32_t layer = 0; layer < m.n_layers; ++layer) {
    if (opt.layers && !opt.layers->count(layer)) continue;
    for (std::uint32_t h = 0; h < m.n_kv_heads; ++h) {
      if (opt.kv_heads && !opt.kv_heads->count(h)) continue;
      const auto* k = m.find(layer, h, Role::key, RopePhase::pre_rope);
      if (!k) continue;
      const auto hdr = read_dump_header(base / k->path);
      if (static_cast<std::int64_t>(hdr.n) < longest)
        throw ManifestError("requested length " + std::to_string(longest) + " exceeds dump length " +
                            std::to_string(hdr.n) + " for " + k->path);
      tasks.push_back({layer, h});
    }
  }

  std::vector<detail::CellOutput> outputs(tasks.size() * 2);
  detail::run_parallel(tasks.size(), opt.threads, [&](std::size_t t) {
    const auto [layer, kv] = tasks[t];
    detail::CellInput pre{layer, kv, *load(layer, kv, Role::key, RopePhase::pre_rope), {}};
    std::vector<LatentCloud> post_queries;
    for (std::size_t g = 0; g < group; ++g) {
      const auto qh = static_cast<std::uint32_t>(kv * group + g);
      auto q = load(layer, qh, Role::query, RopePhase::pre_rope);
      if (!q) throw ManifestError("missing pre_rope query head " + std::to_string(qh));
      auto qpost = load(layer, qh, Role::query, RopePhase::post_rope);
      post_queries.push_back(qpost ? std::move(*qpost) : apply_rope(*q, schedule));
      pre.queries.push_back(std::move(*q));
    }
    auto kpost = load(layer, kv, Role::key, RopePhase::post_rope);
    detail::CellInput post{layer, kv, kpost ? std::move(*kpost) : apply_rope(pre.keys, schedule),
                           std::move(post_queries)};
    outputs[2 * t] = detail::analyze_cell(pre, RopePhase::pre_rope, opt, attn);
    outputs[2 * t + 1] = detail::analyze_cell(post, RopePhase::post_rope, opt, attn);
  });

  AnalyzeResult res;
  res.seed = opt.seed;
  res.config_hash = sha256_hex(analyze_config_string(sha256_file(manifest_path), opt)).substr(0, 16);
  for (auto& o : outputs) {
    res.cells.insert(res.cells.end(), o.rows.begin(), o.rows.end());
    res.profile.insert(res.profile.end(), o.profile.begin(), o.profile.end());
  }
  return res;
}

// --- CSV emission -----------------------------------------------------------

inline std::string metadata_block(const std::string& config_hash, std::uint64_t seed) {
  std::ostringstream s;
  s << "# tool=" << kToolName << "\n# version=" << kToolVersion << "\n# seed=" << seed
    << "\n# config_hash=" << config_hash << "\n";
  return s.str();
}

inline constexpr const char* kCellColumns =
    "layer,kv_head,length,phase,n_keys,n_queries,"
    "mean_intra_key_cosine,mean_intra_query_cosine,mean_inter_cosine,"
    "mean_intra_key_dot,mean_intra_query_dot,mean_inter_dot,silhouette,davies_bouldin,"
    "zero_vectors_excluded,pairs_mode,"
    "key_fsv,key_frobenius,key_stable_rank,key_fsv_variance_fraction,"
    "query_fsv,query_frobenius,query_stable_rank,query_fsv_variance_fraction,"
    "sink_share,max_other_key_share,max_qk,seed,status";

inline constexpr const char* kAggregateColumns =
    "length,phase,n_cells,"
    "mean_intra_key_cosine,mean_intra_query_cosine,mean_inter_cosine,"
    "mean_intra_key_dot,mean_intra_query_dot,mean_inter_dot,silhouette,davies_bouldin,"
    "pairs_mode,key_fsv,key_frobenius,key_stable_rank,key_fsv_variance_fraction,"
    "query_fsv,query_frobenius,query_stable_rank,query_fsv_variance_fraction,"
    "sink_share,max_other_key_share,max_qk,seed";

inline constexpr const char* kProfileColumns =
    "layer,kv_head,phase,position,key_norm,mean_key_score,normalized_key_score,seed";

namespace detail {

inline std::string opt_field(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

// Values of a cell row in aggregate column order (from mean_intra_key_cosine
// onward, pairs_mode excluded).
inline std::vector<std::optional<double>> numeric_fields(const CellRow& r) {
  std::vector<std::optional<double>> v;
  auto push_cluster = [&](auto member) {
    v.push_back(r.cluster ? std::optional<double>(member(*r.cluster)) : std::nullopt);
  };
  push_cluster([](const ClusterStats& c) { return c.mean_intra_key_cosine; });
  push_cluster([](const ClusterStats& c) { return c.mean_intra_query_cosine; });
  push_cluster([](const ClusterStats& c) { return c.mean_inter_cosine; });
  push_cluster([](const ClusterStats& c) { return c.mean_intra_key_dot; });
  push_cluster([](const ClusterStats& c) { return c.mean_intra_query_dot; });
  push_cluster([](const ClusterStats& c) { return c.mean_inter_dot; });
  push_cluster([](const ClusterStats& c) { return c.silhouette; });
  push_cluster([](const ClusterStats& c) { return c.davies_bouldin; });
  for (const auto* s : {&r.key_spectrum, &r.query_spectrum}) {
    if (*s) {
      v.push_back((*s)->spectral_norm);
      v.push_back((*s)->frobenius_norm);
      v.push_back((*s)->stable_rank);
      v.push_back((*s)->fsv_variance_fraction);
    } else {
      v.insert(v.end(), 4, std::nullopt);
    }
  }
  v.push_back(r.sink_share);
  v.push_back(r.max_other_key_share);
  v.push_back(r.max_qk);
  return v;
}

}  // namespace detail

inline std::string cells_csv(const AnalyzeResult& res) {
  std::ostringstream s;
  s << metadata_block(res.config_hash, res.seed) << kCellColumns << '\n';
  for (const auto& r : res.cells) {
    const auto v = detail::numeric_fields(r);
    s << r.layer << ',' << r.kv_head << ',' << r.length << ',' << to_string(r.phase) << ',' << r.n_keys << ','
      << r.n_queries;
    for (std::size_t i = 0; i < 8; ++i) s << ',' << detail::opt_field(v[i]);
    s << ',' << (r.cluster ? std::to_string(r.cluster->zero_vectors_excluded) : "") << ','
      << (r.cluster ? (r.cluster->exact ? "exact" : "sampled") : "");
    for (std::size_t i = 8; i < v.size(); ++i) s << ',' << detail::opt_field(v[i]);
    s << ',' << res.seed << ',' << detail::csv_safe(r.status) << '\n';
  }
  return s.str();
}

// Unweighted mean over successful cells, per (length, phase).
inline std::string aggregate_csv(const AnalyzeResult& res) {
  struct Acc {
    std::size_t cells = 0;
    std::vector<double> sum;
    std::vector<std::size_t> count;
    bool any_sampled = false;
    bool any_cluster = false;
  };
  std::map<std::pair<std::int64_t, int>, Acc> groups;
  for (const auto& r : res.cells) {
    if (r.status != "ok") continue;
    auto& a = groups[{r.length, static_cast<int>(r.phase)}];
    const auto v = detail::numeric_fields(r);
    if (a.sum.empty()) {
      a.sum.assign(v.size(), 0.0);
      a.count.assign(v.size(), 0);
    }
    ++a.cells;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i]) {
        a.sum[i] += *v[i];
        ++a.count[i];
      }
    if (r.cluster) {
      a.any_cluster = true;
      a.any_sampled = a.any_sampled || !r.cluster->exact;
    }
  }
  std::ostringstream s;
  s << metadata_block(res.config_hash, res.seed) << kAggregateColumns << '\n';
  for (const auto& [key, a] : groups) {
    s << key.first << ',' << to_string(static_cast<RopePhase>(key.second)) << ',' << a.cells;
    auto mean = [&](std::size_t i) {
      return a.count[i] ? fmt_double(a.sum[i] / static_cast<double>(a.count[i])) : std::string();
    };
    for (std::size_t i = 0; i < 8; ++i) s << ',' << mean(i);
    s << ',' << (a.any_cluster ? (a.any_sampled ? "sampled" : "exact") : "");
    for (std::size_t i = 8; i < a.sum.size(); ++i) s << ',' << mean(i);
    s << ',' << res.seed << '\n';
  }
  return s.str();
}

inline std::string profile_csv(const AnalyzeResult& res) {
  std::ostringstream s;
  s << metadata_block(res.config_hash, res.seed) << kProfileColumns << '\n';
  for (const auto& p : res.profile)
    s << p.layer << ',' << p.kv_head << ',' << to_string(p.phase) << ',' << p.position << ','
      << fmt_double(p.key_norm) << ',' << detail::opt_field(p.mean_key_score) << ','
      << detail::opt_field(p.normalized_key_score) << ',' << res.seed << '\n';
  return s.str();
}

}  // namespace ropegeom

#endif  // ROPEGEOM_ANALYZE_HPP
