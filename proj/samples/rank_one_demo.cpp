// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rotates a rank-1 cloud concentrated on one plane and prints how its
// spectral norm and stable rank move with sequence length.

#include <cstdio>

#include "ropegeom/theory.hpp"

int main() {
  using namespace ropegeom;
  RankOneSpec spec;
  spec.v = single_plane_v(64);
  spec.n_grid = {1, 16, 256, 4096, 16384};
  const auto schedule = build_schedule(StandardConfig{10000.0}, 64);

  std::printf("%8s %12s %12s\n", "n", "fsv_ratio", "srank_ratio");
  for (const auto& p : rank_one_curve(spec, schedule))
    std::printf("%8lld %12.6f %12.6f\n", static_cast<long long>(p.n), p.fsv_ratio(), p.srank_ratio());
  return 0;
}
