// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_SELFTEST_HPP
#define ROPEGEOM_SELFTEST_HPP

// Deterministic synthetic manifests that exercise the whole analysis path
// without any model: antipodal key/query clusters, overlapping Gaussians, and
// antipodal clusters with a zero-norm key at position 0.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ropegeom/dump.hpp"
#include "ropegeom/manifest.hpp"
#include "ropegeom/rng.hpp"

namespace ropegeom {

enum class Fixture { antipodal, gaussian, origin_sink };

inline const char* to_string(Fixture f) {
  switch (f) {
    case Fixture::antipodal: return "antipodal";
    case Fixture::gaussian: return "gaussian";
    case Fixture::origin_sink: return "origin_sink";
  }
  return "unknown";
}

struct FixtureParams {
  std::size_t positions = 2048;
  std::size_t head_dim = 16;
  std::uint32_t n_kv_heads = 2;
  std::uint32_t n_query_heads = 4;
  std::int64_t train_len = 1024;
  double base_theta = 10000.0;
  // Cluster offset: the unscaled logit between a query and a non-sink key is
  // about -offset^2. offset^2 / sqrt(16) = 12 keeps the sink dominant over
  // 8k keys without rotation.
  double offset = std::sqrt(48.0);
  double noise = 0.05;
};

// Direction of the clusters. The sink fixture puts it on the two slowest
// planes so clusters stay separated under rotation up to about train_len
// tokens and then start to overlap.
inline std::vector<double> fixture_direction(Fixture f, const FixtureParams& p, Rng& rng) {
  std::vector<double> w(p.head_dim, 0.0);
  if (f == Fixture::origin_sink) {
    w[p.head_dim - 4] = 1.0 / std::sqrt(2.0);
    w[p.head_dim - 2] = 1.0 / std::sqrt(2.0);
    return w;
  }
  double s = 0.0;
  for (double& x : w) {
    x = rng.normal();
    s += x * x;
  }
  for (double& x : w) x /= std::sqrt(s);
  return w;
}

inline LatentCloud fixture_cloud(Fixture f, Role role, const std::vector<double>& w, const FixtureParams& p,
                                 Rng& rng) {
  Matrix m(p.positions, p.head_dim);
  const double sign = role == Role::key ? -1.0 : 1.0;
  for (std::size_t i = 0; i < p.positions; ++i)
    for (std::size_t c = 0; c < p.head_dim; ++c)
      m(i, c) = f == Fixture::gaussian ? rng.normal() : sign * p.offset * w[c] + p.noise * rng.normal();
  if (f == Fixture::origin_sink && role == Role::key)
    for (std::size_t c = 0; c < p.head_dim; ++c) m(0, c) = 0.0;
  CloudMeta meta;
  meta.model = std::string("selftest-") + to_string(f);
  meta.role = role;
  return LatentCloud(std::move(m), std::move(meta));
}

// Writes <dir>/manifest.json and its pre_rope dumps. Returns the manifest path.
inline std::filesystem::path write_fixture(const std::filesystem::path& dir, Fixture f, std::uint64_t seed,
                                           const FixtureParams& p = {}, WriteMode mode = WriteMode::fail_if_exists) {
  std::filesystem::create_directories(dir);
  Manifest m;
  m.model_name = std::string("selftest-") + to_string(f);
  m.train_len = static_cast<std::uint64_t>(p.train_len);
  m.head_dim = p.head_dim;
  m.n_layers = 1;
  m.n_query_heads = p.n_query_heads;
  m.n_kv_heads = p.n_kv_heads;
  m.rope_variant = StandardConfig{p.base_theta};

  const std::uint32_t group = p.n_query_heads / p.n_kv_heads;
  for (std::uint32_t kv = 0; kv < p.n_kv_heads; ++kv) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(f), kv}));
    const auto w = fixture_direction(f, p, rng);
    auto emit = [&](LatentCloud cloud, std::uint32_t head) {
      cloud.meta().head = head;
      const std::string name =
          std::string("L0_H") + std::to_string(head) + "_" + to_string(cloud.meta().role) + "_pre.rkq";
      write_dump(dir / name, cloud, mode);
      m.files.push_back({0, head, cloud.meta().role, RopePhase::pre_rope, name, sha256_file(dir / name)});
    };
    emit(fixture_cloud(f, Role::key, w, p, rng), kv);
    for (std::uint32_t g = 0; g < group; ++g) emit(fixture_cloud(f, Role::query, w, p, rng), kv * group + g);
  }
  const auto path = dir / "manifest.json";
  if (mode == WriteMode::fail_if_exists && std::filesystem::exists(path))
    throw DumpError(DumpErrorKind::already_exists, path.string());
  save_manifest(path, m);
  return path;
}

inline std::vector<std::filesystem::path> write_selftest(const std::filesystem::path& root, std::uint64_t seed,
                                                         const FixtureParams& p = {},
                                                         WriteMode mode = WriteMode::fail_if_exists) {
  std::vector<std::filesystem::path> out;
  for (Fixture f : {Fixture::antipodal, Fixture::gaussian, Fixture::origin_sink})
    out.push_back(write_fixture(root / to_string(f), f, seed, p, mode));
  return out;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_SELFTEST_HPP
