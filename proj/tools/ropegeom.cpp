// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0
//
// ropegeom command-line tool. Exit codes: 0 success, 1 usage error,
// 2 I/O or validation error, 3 failed assertion.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ropegeom/analyze.hpp"
#include "ropegeom/dump.hpp"
#include "ropegeom/manifest.hpp"
#include "ropegeom/rotation.hpp"
#include "ropegeom/schedule.hpp"
#include "ropegeom/selftest.hpp"
#include "ropegeom/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace ropegeom;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kAssertion = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
  const char* env = std::getenv("ROPEGEOM_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

// All-or-nothing: every target is checked before anything is written, and
// each file goes through a temp file and a rename.
void write_outputs(const std::vector<std::pair<fs::path, std::string>>& files, bool force) {
  if (!force)
    for (const auto& [path, _] : files)
      if (fs::exists(path)) throw IoError(path.string() + " exists (use --force to overwrite)");
  for (const auto& [path, text] : files) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + tmp.string());
      out << text;
      if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
  }
}

std::string config_hash(const std::string& canonical) { return sha256_hex(canonical).substr(0, 16); }

ordered_json metadata_json(const std::string& hash, std::uint64_t seed) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"seed", seed}, {"config_hash", hash}};
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

// --- variant flags -------------------------------------------------------------

struct VariantFlags {
  std::string variant = "standard";
  double theta = 0.0;
  std::int64_t train_len = 0;
  double fraction = 0.0;
  std::int64_t max_wavelength = 0;
  std::int64_t cycles = 0;
  double hf_base_theta = 0.0;
  CLI::Option* o_theta = nullptr;
  CLI::Option* o_train_len = nullptr;
  CLI::Option* o_fraction = nullptr;
  CLI::Option* o_max_wavelength = nullptr;
  CLI::Option* o_cycles = nullptr;
  CLI::Option* o_hf_base_theta = nullptr;
  CLI::Option* o_variant = nullptr;

  void attach(CLI::App* app) {
    o_variant = app->add_option("--variant", variant, "standard | high-frequency | partial | rope-id")
                    ->check(CLI::IsMember({"standard", "high-frequency", "partial", "rope-id"}));
    o_theta = app->add_option("--theta", theta, "base theta (standard: 10000, partial: 500000)");
    o_train_len = app->add_option("--train-len", train_len, "training length (high-frequency, rope-id: 4096)");
    o_fraction = app->add_option("--fraction", fraction, "rotated fraction (partial, rope-id: 0.5)");
    o_max_wavelength = app->add_option("--max-wavelength", max_wavelength, "fastest wavelength in tokens (rope-id: 32)");
    o_cycles = app->add_option("--cycles", cycles, "cycles per training length (rope-id: 2)");
    o_hf_base_theta = app->add_option("--hf-base-theta", hf_base_theta, "high-frequency base-theta form");
  }

  // train_len_shared: the command also uses --train-len for itself, so it is
  // legal with every variant.
  RopeVariantConfig build(bool train_len_shared = false) const {
    auto reject = [&](CLI::Option* o, const char* name) {
      if (o->count()) throw UsageError(std::string(name) + " does not apply to --variant " + variant);
    };
    if (variant == "standard") {
      reject(o_fraction, "--fraction");
      reject(o_max_wavelength, "--max-wavelength");
      reject(o_cycles, "--cycles");
      reject(o_hf_base_theta, "--hf-base-theta");
      if (!train_len_shared) reject(o_train_len, "--train-len");
      return StandardConfig{o_theta->count() ? theta : 10000.0};
    }
    if (variant == "high-frequency") {
      reject(o_theta, "--theta");
      reject(o_fraction, "--fraction");
      reject(o_max_wavelength, "--max-wavelength");
      reject(o_cycles, "--cycles");
      HighFrequencyConfig c{o_train_len->count() ? train_len : 4096, std::nullopt};
      if (o_hf_base_theta->count()) c.base_theta = hf_base_theta;
      return c;
    }
    if (variant == "partial") {
      reject(o_max_wavelength, "--max-wavelength");
      reject(o_cycles, "--cycles");
      reject(o_hf_base_theta, "--hf-base-theta");
      if (!train_len_shared) reject(o_train_len, "--train-len");
      return PartialConfig{o_theta->count() ? theta : 500000.0, o_fraction->count() ? fraction : 0.5};
    }
    reject(o_theta, "--theta");
    reject(o_hf_base_theta, "--hf-base-theta");
    return RopeIdConfig{o_train_len->count() ? train_len : 4096, o_max_wavelength->count() ? max_wavelength : 32,
                        o_cycles->count() ? cycles : 2, o_fraction->count() ? fraction : 0.5};
  }

  bool any_set() const {
    for (auto* o : {o_variant, o_theta, o_train_len, o_fraction, o_max_wavelength, o_cycles, o_hf_base_theta})
      if (o->count()) return true;
    return false;
  }
};

FrequencySchedule schedule_or_usage(const RopeVariantConfig& c, std::size_t d) {
  try {
    return build_schedule(c, d);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// --- frequencies ---------------------------------------------------------------

struct FrequenciesCmd {
  VariantFlags vf;
  std::size_t head_dim = 128;
  std::string format = "csv";

  void attach(CLI::App* app) {
    vf.attach(app);
    app->add_option("--head-dim", head_dim, "head dimension (even)")->required();
    app->add_option("--format", format, "csv | table")->check(CLI::IsMember({"csv", "table"}));
  }

  int run() const {
    const auto s = schedule_or_usage(vf.build(), head_dim);
    if (format == "csv") {
      std::cout << "plane,frequency,wavelength,rotated\n";
      for (std::size_t k = 0; k < s.planes(); ++k) {
        const bool r = s.rotates(k);
        std::cout << k << ',' << (r ? fmt_double(s.frequency(k)) : "0") << ','
                  << (r ? fmt_double(s.wavelength(k)) : "inf") << ',' << (r ? 1 : 0) << '\n';
      }
    } else {
      std::cout << variant_name(s.variant()) << ", head_dim " << s.head_dim() << ", rotated planes "
                << s.rotated_planes() << " of " << s.planes() << '\n';
      char line[96];
      std::snprintf(line, sizeof line, "%6s  %22s  %22s\n", "plane", "frequency", "wavelength");
      std::cout << line;
      for (std::size_t k = 0; k < s.planes(); ++k) {
        if (s.rotates(k))
          std::snprintf(line, sizeof line, "%6zu  %22.15g  %22.15g\n", k, s.frequency(k), s.wavelength(k));
        else
          std::snprintf(line, sizeof line, "%6zu  %22s  %22s\n", k, "(identity)", "inf");
        std::cout << line;
      }
    }
    return kOk;
  }
};

// --- synth ---------------------------------------------------------------------

struct SynthCmd {
  VariantFlags vf;
  std::string preset;
  std::size_t head_dim = 128;
  std::int64_t train_len = 4096;
  std::vector<std::int64_t> n_grid;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  CLI::Option* o_preset = nullptr;
  CLI::Option* o_head_dim = nullptr;
  CLI::Option* o_n_grid = nullptr;

  void attach(CLI::App* app) {
    o_preset = app->add_option("--preset", preset, "named experiment (fig7)");
    vf.attach(app);
    o_head_dim = app->add_option("--head-dim", head_dim, "head dimension (default 128)");
    o_n_grid = app->add_option("--n-grid", n_grid, "sequence lengths, comma separated")->delimiter(',');
    app->add_option("--seed", seed, "recorded in the metadata (the experiment has no randomness)");
    app->add_option("--out", out, "output directory (default $ROPEGEOM_OUT_DIR or .)");
    app->add_flag("--force", force, "overwrite existing outputs");
  }

  int run() {
    std::vector<RopeVariantConfig> variants;
    std::vector<std::int64_t> grid;
    std::string name;
    if (o_preset->count()) {
      if (preset != "fig7") throw UsageError("unknown preset: " + preset);
      if (vf.any_set() || o_head_dim->count() || o_n_grid->count())
        throw UsageError("--preset fig7 fixes the variants, head dimension and grid");
      head_dim = 128;
      train_len = 4096;
      variants = fig7_preset_variants(train_len);
      grid = fig7_preset_grid();
      name = "fig7";
    } else {
      if (vf.o_train_len->count()) train_len = vf.train_len;
      if (!vf.o_variant->count()) {
        for (auto* o : {vf.o_theta, vf.o_fraction, vf.o_max_wavelength, vf.o_cycles, vf.o_hf_base_theta})
          if (o->count()) throw UsageError("variant parameters need --variant");
        variants = fig7_preset_variants(train_len);
      } else {
        variants = {vf.build(true)};
      }
      grid = o_n_grid->count() ? n_grid : fig7_preset_grid();
      name = "synth";
    }
    for (const auto& v : variants) schedule_or_usage(v, head_dim);
    if (grid.empty()) throw UsageError("empty --n-grid");
    for (auto n : grid)
      if (n < 1) throw UsageError("--n-grid values must be >= 1");

    const auto res = synth_fig7(head_dim, train_len, grid, variants);

    std::ostringstream canon;
    canon << "synth;preset=" << name << ";d=" << head_dim << ";L=" << train_len << ";grid=" << join(grid)
          << ";seed=" << seed << ";variants=";
    for (const auto& v : variants) canon << variant_to_json(v).dump() << ';';
    const std::string hash = config_hash(canon.str());

    std::ostringstream csv;
    csv << metadata_block(hash, seed) << "variant,n,fsv_ratio,srank_pre,srank_post\n";
    for (const auto& r : res.rows)
      csv << r.variant << ',' << r.n << ',' << fmt_double(r.fsv_ratio) << ',' << fmt_double(r.srank_pre) << ','
          << fmt_double(r.srank_post) << '\n';

    ordered_json summary;
    summary["metadata"] = metadata_json(hash, seed);
    summary["head_dim"] = head_dim;
    summary["train_len"] = train_len;
    summary["c1_floor"] = kFig7FloorC1;
    summary["c2_relative_drift"] = kFig7DriftC2;
    ordered_json verdicts = ordered_json::array();
    for (const auto& v : res.verdicts) {
      ordered_json j = {{"variant", v.variant}, {"available", v.available}};
      if (v.available) {
        j["ratio_at_train_len"] = v.ratio_at_train;
        j["ratio_at_max_n"] = v.ratio_at_max;
        j["C1"] = v.c1 ? "pass" : "fail";
        j["C2"] = v.c2 ? "pass" : "fail";
      }
      verdicts.push_back(j);
    }
    summary["verdicts"] = verdicts;

    const fs::path dir = out.empty() ? default_out_dir() : fs::path(out);
    const fs::path csv_path = dir / (name + ".csv");
    const fs::path json_path = dir / (name + "_summary.json");
    write_outputs({{csv_path, csv.str()}, {json_path, summary.dump(2) + "\n"}}, force);
    std::cout << csv_path.string() << '\n' << json_path.string() << '\n';
    return kOk;
  }
};

// --- theory --------------------------------------------------------------------

struct TheoryCmd {
  std::string suite = "all";
  std::string v = "single-plane";
  std::int64_t n = 65536;
  std::size_t d = 0;
  double theta = 10000.0;
  std::string u = "ones";
  double u_param = 0.0;
  std::string tier = "strict";
  std::uint64_t seed = 0;
  std::size_t clouds = 100;

  void attach(CLI::App* app) {
    app->add_option("--suite", suite, "lemma1 | lemma2 | theorem1 | all")
        ->check(CLI::IsMember({"lemma1", "lemma2", "theorem1", "all"}));
    app->add_option("--v", v, "rank-1 direction: single-plane | uniform")
        ->check(CLI::IsMember({"single-plane", "uniform"}));
    app->add_option("--n", n, "longest sequence length; the grid doubles from 1 up to it");
    app->add_option("--d", d, "head dimension (default 128 single-plane, 16 uniform)");
    app->add_option("--theta", theta, "standard base theta for the rank-1 suites");
    app->add_option("--u", u, "row scales: ones | monotone | oscillating")
        ->check(CLI::IsMember({"ones", "monotone", "oscillating"}));
    app->add_option("--u-param", u_param, "slope (monotone) or amplitude (oscillating)");
    app->add_option("--tier", tier, "tolerance tier: strict (5%) | loose (10%)")
        ->check(CLI::IsMember({"strict", "loose"}));
    app->add_option("--seed", seed, "seed for the random Frobenius clouds");
    app->add_option("--clouds", clouds, "random clouds for the Frobenius suite");
  }

  std::vector<std::int64_t> grid() const {
    std::vector<std::int64_t> g;
    for (std::int64_t x = 1; x < n; x *= 2) g.push_back(x);
    g.push_back(n);
    return g;
  }

  RankOneSpec spec() const {
    RankOneSpec s;
    s.u_kind = u == "ones" ? UKind::ones : u == "monotone" ? UKind::monotone : UKind::oscillating;
    s.u_param = u_param;
    const std::size_t dim = d ? d : (v == "uniform" ? 16 : 128);
    if (dim < 2 || dim % 2) throw UsageError("--d must be even and >= 2");
    s.v = v == "uniform" ? uniform_v(dim) : single_plane_v(dim);
    s.n_grid = grid();
    return s;
  }

  static ordered_json report_json(const std::string& name, const ConvergenceReport& r) {
    const auto& last = r.points.back();
    return {{"case", name},
            {"passed", r.passed()},
            {"quantity", r.quantity},
            {"max_alpha", r.max_alpha},
            {"predicted", last.predicted},
            {"measured", last.measured},
            {"n", last.n},
            {"relative_gap", last.relative_gap},
            {"tolerance", r.tolerance},
            {"asymptotic_checked", r.asymptotic_checked},
            {"within_bounds", r.within_bounds},
            {"converged", r.converged},
            {"tail_monotone", r.tail_monotone},
            {"max_duality_error", r.max_duality_error},
            {"duality_ok", r.duality_ok}};
  }

  ordered_json lemma2_case() const {
    Rng rng(derive_seed(seed, {2}));
    double worst = 0.0;
    std::string worst_variant;
    for (std::size_t c = 0; c < clouds; ++c) {
      const std::size_t dim = 4 + 2 * rng.below(63);
      const std::size_t rows = 1 + rng.below(4096);
      Matrix m(rows, dim);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < dim; ++j) m(i, j) = rng.normal();
      const LatentCloud cloud(std::move(m));
      for (const auto& variant : fig7_preset_variants(4096)) {
        const double dev = verify_lemma2(cloud, build_schedule(variant, dim));
        if (dev >= worst) {
          worst = dev;
          worst_variant = variant_name(variant);
        }
      }
    }
    return {{"case", "lemma2/random-clouds"},
            {"passed", worst <= 1e-6},
            {"clouds", clouds},
            {"variants", 4},
            {"max_relative_deviation", worst},
            {"worst_variant", worst_variant},
            {"tolerance", 1e-6}};
  }

  int run() const {
    if (n < 1) throw UsageError("--n must be >= 1");
    if (u == "ones" && u_param != 0.0) throw UsageError("--u-param needs --u monotone or oscillating");
    const double tol = tier == "strict" ? kStrictTolerance : kLooseTolerance;
    std::ostringstream canon;
    canon << "theory;suite=" << suite << ";v=" << v << ";n=" << n << ";d=" << d << ";theta=" << fmt_double(theta)
          << ";u=" << u << ";u_param=" << fmt_double(u_param) << ";tier=" << tier << ";seed=" << seed
          << ";clouds=" << clouds;

    ordered_json cases = ordered_json::array();
    if (suite == "lemma1" || suite == "theorem1" || suite == "all") {
      const auto s = spec();
      FrequencySchedule sched = schedule_or_usage(StandardConfig{theta}, s.v.size());
      try {
        s.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const std::string tag = "/" + v + "/d" + std::to_string(s.v.size()) + "/u-" + u;
      if (suite != "theorem1") cases.push_back(report_json("lemma1" + tag, verify_lemma1(s, sched, tol)));
      if (suite != "lemma1") cases.push_back(report_json("theorem1" + tag, verify_theorem1(s, sched, tol)));
    }
    if (suite == "lemma2" || suite == "all") cases.push_back(lemma2_case());

    bool all = true;
    for (const auto& c : cases) all = all && c["passed"].get<bool>();
    ordered_json j;
    j["metadata"] = metadata_json(config_hash(canon.str()), seed);
    j["suite"] = suite;
    j["tier"] = tier;
    j["passed"] = all;
    j["cases"] = cases;
    std::cout << j.dump(2) << '\n';
    if (!all) {
      for (const auto& c : cases)
        if (!c["passed"].get<bool>()) std::cerr << "FAILED: " << c["case"].get<std::string>() << '\n';
      return kAssertion;
    }
    return kOk;
  }
};

// --- analyze -------------------------------------------------------------------

struct AnalyzeCmd {
  std::string manifest;
  std::vector<std::int64_t> lengths = default_lengths();
  std::string metrics = "cluster,spectral,sink";
  std::uint64_t seed = 0;
  std::size_t pairs = 200000;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
  bool force = false;
  bool temperature_scaling = false;
  std::vector<std::uint32_t> layers;
  std::vector<std::uint32_t> heads;
  CLI::Option* o_layers = nullptr;
  CLI::Option* o_heads = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--manifest", manifest, "manifest.json")->required();
    app->add_option("--lengths", lengths, "window lengths, comma separated")->delimiter(',');
    app->add_option("--metrics", metrics, "comma separated subset of cluster,spectral,sink");
    app->add_option("--seed", seed, "seed for pair sampling");
    app->add_option("--pairs", pairs, "pair budget for sampled cluster statistics");
    app->add_option("--threads", threads, "worker threads (default: hardware threads)");
    app->add_option("--out", out, "output directory (default $ROPEGEOM_OUT_DIR or .)");
    app->add_flag("--force", force, "overwrite existing outputs");
    app->add_flag("--temperature-scaling", temperature_scaling, "apply the length-dependent logit temperature");
    o_layers = app->add_option("--layers", layers, "only these layers")->delimiter(',');
    o_heads = app->add_option("--heads", heads, "only these kv heads")->delimiter(',');
  }

  int run() const {
    AnalyzeOptions opt;
    opt.metrics.clear();
    std::stringstream ss(metrics);
    for (std::string m; std::getline(ss, m, ',');) {
      if (m.empty()) continue;
      try {
        opt.metrics.insert(metric_from_string(m));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    if (opt.metrics.empty()) throw UsageError("--metrics is empty");
    if (lengths.empty()) throw UsageError("--lengths is empty");
    for (auto l : lengths)
      if (l < 1) throw UsageError("--lengths values must be >= 1");
    if (threads == 0) throw UsageError("--threads must be >= 1");
    opt.lengths = lengths;
    opt.seed = seed;
    opt.pair_budget = pairs;
    opt.threads = threads;
    opt.temperature_scaling = temperature_scaling;
    if (o_layers->count()) opt.layers = std::set<std::uint32_t>(layers.begin(), layers.end());
    if (o_heads->count()) opt.kv_heads = std::set<std::uint32_t>(heads.begin(), heads.end());

    const auto report = validate_manifest(manifest);
    if (!report.valid()) {
      for (const auto& i : report.issues)
        std::cerr << "manifest entry " << i.index << " (" << i.path << "): " << i.problem << '\n';
      throw IoError("manifest validation failed with " + std::to_string(report.issues.size()) + " issue(s)");
    }

    const auto res = analyze_manifest(manifest, opt);
    const fs::path dir = out.empty() ? default_out_dir() : fs::path(out);
    write_outputs({{dir / "cells.csv", cells_csv(res)},
                   {dir / "aggregate.csv", aggregate_csv(res)},
                   {dir / "sink_profile.csv", profile_csv(res)}},
                  force);
    std::size_t failed = 0;
    for (const auto& c : res.cells) failed += c.status != "ok";
    if (failed) std::cerr << failed << " cell row(s) failed; see the status column\n";
    std::cout << (dir / "cells.csv").string() << '\n'
              << (dir / "aggregate.csv").string() << '\n'
              << (dir / "sink_profile.csv").string() << '\n';
    return kOk;
  }
};

// --- rope ----------------------------------------------------------------------

struct RopeCmd {
  VariantFlags vf;
  std::string in;
  std::string out;
  std::size_t head_dim = 0;
  bool positions_zero = false;
  bool force = false;
  CLI::Option* o_head_dim = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--in", in, "pre_rope .rkq dump")->required();
    app->add_option("--out", out, "output dump (default: <out dir>/<input stem>_post.rkq)");
    vf.attach(app);
    o_head_dim = app->add_option("--head-dim", head_dim, "declared head dimension; must match the dump");
    app->add_flag("--positions-zero", positions_zero, "rotate every row as position 0 (identity)");
    app->add_flag("--force", force, "accept a post_rope input and overwrite the output");
  }

  int run() const {
    const auto variant = vf.build();
    const LatentCloud cloud = read_dump(in);
    if (o_head_dim->count() && head_dim != cloud.dim())
      throw IoError("dimension error: dump has d=" + std::to_string(cloud.dim()) + ", declared head_dim=" +
                    std::to_string(head_dim));
    if (cloud.meta().phase == RopePhase::post_rope && !force)
      throw IoError(in + " is already post_rope (use --force to rotate it again)");
    const auto schedule = schedule_or_usage(variant, cloud.dim());

    LatentCloud rotated = [&] {
      if (!positions_zero) return apply_rope(cloud, schedule);
      const BlockRotation r0 = rotation_at(schedule, 0);
      Matrix m(cloud.size(), cloud.dim());
      for (std::size_t i = 0; i < cloud.size(); ++i) r0.apply(cloud.row(i), m.row(i));
      CloudMeta meta = cloud.meta();
      meta.phase = RopePhase::post_rope;
      return LatentCloud(std::move(m), std::move(meta));
    }();

    fs::path target = out.empty() ? default_out_dir() / (fs::path(in).stem().string() + "_post.rkq") : fs::path(out);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_dump(target, rotated, force ? WriteMode::overwrite : WriteMode::fail_if_exists);
    std::cout << target.string() << '\n';
    return kOk;
  }
};

// --- selftest ------------------------------------------------------------------

struct SelftestCmd {
  std::string out;
  std::uint64_t seed = 0;
  std::size_t positions = 2048;
  bool force = false;

  void attach(CLI::App* app) {
    app->add_option("--out", out, "output directory (default $ROPEGEOM_OUT_DIR or .)");
    app->add_option("--seed", seed, "fixture seed");
    app->add_option("--positions", positions, "tokens per dump");
    app->add_flag("--force", force, "overwrite existing fixtures");
  }

  int run() const {
    if (positions < 2) throw UsageError("--positions must be >= 2");
    FixtureParams p;
    p.positions = positions;
    const fs::path dir = out.empty() ? default_out_dir() : fs::path(out);
    if (!force)
      for (Fixture f : {Fixture::antipodal, Fixture::gaussian, Fixture::origin_sink})
        if (fs::exists(dir / to_string(f))) throw IoError((dir / to_string(f)).string() + " exists (use --force)");
    for (const auto& m : write_selftest(dir, seed, p, force ? WriteMode::overwrite : WriteMode::fail_if_exists))
      std::cout << m.string() << '\n';
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RoPE geometry laboratory: schedules, theory checks, synthetic experiments and dump analysis"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  FrequenciesCmd frequencies;
  SynthCmd synth;
  TheoryCmd theory;
  AnalyzeCmd analyze;
  RopeCmd rope;
  SelftestCmd selftest;
  auto* c_freq = app.add_subcommand("frequencies", "print the frequency schedule of a variant");
  auto* c_synth = app.add_subcommand("synth", "rank-1 FSV decay curves across variants");
  auto* c_theory = app.add_subcommand("theory", "check the rank-1 limits and Frobenius preservation");
  auto* c_analyze = app.add_subcommand("analyze", "cluster, spectral and sink metrics over a manifest");
  auto* c_rope = app.add_subcommand("rope", "apply a schedule to a pre_rope dump");
  auto* c_selftest = app.add_subcommand("selftest", "write synthetic fixture manifests");
  frequencies.attach(c_freq);
  synth.attach(c_synth);
  theory.attach(c_theory);
  analyze.attach(c_analyze);
  rope.attach(c_rope);
  selftest.attach(c_selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_freq) return frequencies.run();
    if (*c_synth) return synth.run();
    if (*c_theory) return theory.run();
    if (*c_analyze) return analyze.run();
    if (*c_rope) return rope.run();
    if (*c_selftest) return selftest.run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
