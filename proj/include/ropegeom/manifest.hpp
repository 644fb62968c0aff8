// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_MANIFEST_HPP
#define ROPEGEOM_MANIFEST_HPP

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ropegeom/dump.hpp"
#include "ropegeom/schedule.hpp"

namespace ropegeom {

using nlohmann::json;

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- SHA-256 -----------------------------------------------------------------

inline std::string to_hex(const unsigned char* bytes, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    s[2 * i] = digits[bytes[i] >> 4];
    s[2 * i + 1] = digits[bytes[i] & 0xF];
  }
  return s;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), out.data(), &len) != 1) throw std::runtime_error("sha256: final failed");
    return to_hex(out.data(), len);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256: cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

// --- Variant <-> JSON ---------------------------------------------------------

inline json variant_to_json(const RopeVariantConfig& v) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, StandardConfig>) {
          return {{"kind", "standard"}, {"base_theta", c.base_theta}};
        } else if constexpr (std::is_same_v<T, HighFrequencyConfig>) {
          json j = {{"kind", "high-frequency"}, {"train_len", c.train_len}};
          if (c.base_theta) j["base_theta"] = *c.base_theta;
          return j;
        } else if constexpr (std::is_same_v<T, PartialConfig>) {
          return {{"kind", "partial"}, {"base_theta", c.base_theta}, {"fraction", c.fraction}};
        } else {
          return {{"kind", "rope-id"},
                  {"train_len", c.train_len},
                  {"max_wavelength_tokens", c.max_wavelength_tokens},
                  {"cycles_per_train_len", c.cycles_per_train_len},
                  {"fraction", c.fraction}};
        }
      },
      v);
}

inline RopeVariantConfig variant_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "standard") return StandardConfig{j.value("base_theta", 10000.0)};
  if (kind == "high-frequency") {
    HighFrequencyConfig c{j.value<std::int64_t>("train_len", 4096), std::nullopt};
    if (j.contains("base_theta")) c.base_theta = j.at("base_theta").get<double>();
    return c;
  }
  if (kind == "partial") return PartialConfig{j.value("base_theta", 500000.0), j.value("fraction", 0.5)};
  if (kind == "rope-id")
    return RopeIdConfig{j.value<std::int64_t>("train_len", 4096), j.value<std::int64_t>("max_wavelength_tokens", 32),
                        j.value<std::int64_t>("cycles_per_train_len", 2), j.value("fraction", 0.5)};
  throw ManifestError("unknown rope variant kind: " + kind);
}

// --- Manifest -------------------------------------------------------------------

struct ManifestEntry {
  std::uint32_t layer = 0;
  std::uint32_t head = 0;  // kv head for keys, query head for queries
  Role role = Role::key;
  RopePhase phase = RopePhase::pre_rope;
  std::string path;  // relative to the manifest's directory
  std::string sha256;
};

struct Manifest {
  std::string model_name;
  std::uint64_t train_len = 0;
  std::uint64_t head_dim = 0;
  std::uint64_t n_layers = 0;
  std::uint64_t n_query_heads = 0;
  std::uint64_t n_kv_heads = 0;
  RopeVariantConfig rope_variant = StandardConfig{};
  std::vector<ManifestEntry> files;

  const ManifestEntry* find(std::uint32_t layer, std::uint32_t head, Role role, RopePhase phase) const {
    for (const auto& f : files)
      if (f.layer == layer && f.head == head && f.role == role && f.phase == phase) return &f;
    return nullptr;
  }
};

inline Role role_from_string(const std::string& s) {
  if (s == "key") return Role::key;
  if (s == "query") return Role::query;
  throw ManifestError("unknown role: " + s);
}

inline RopePhase phase_from_string(const std::string& s) {
  if (s == "pre_rope") return RopePhase::pre_rope;
  if (s == "post_rope") return RopePhase::post_rope;
  throw ManifestError("unknown pre_post: " + s);
}

inline json manifest_to_json(const Manifest& m) {
  json files = json::array();
  for (const auto& f : m.files)
    files.push_back({{"layer", f.layer},
                     {"head", f.head},
                     {"role", to_string(f.role)},
                     {"pre_post", to_string(f.phase)},
                     {"path", f.path},
                     {"sha256", f.sha256}});
  return {{"format", "ropegeom-manifest"},
          {"version", 1},
          {"model_name", m.model_name},
          {"train_len", m.train_len},
          {"head_dim", m.head_dim},
          {"n_layers", m.n_layers},
          {"n_query_heads", m.n_query_heads},
          {"n_kv_heads", m.n_kv_heads},
          {"rope_variant", variant_to_json(m.rope_variant)},
          {"files", files}};
}

inline Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    m.model_name = j.at("model_name").get<std::string>();
    m.train_len = j.at("train_len").get<std::uint64_t>();
    m.head_dim = j.at("head_dim").get<std::uint64_t>();
    m.n_layers = j.at("n_layers").get<std::uint64_t>();
    m.n_query_heads = j.at("n_query_heads").get<std::uint64_t>();
    m.n_kv_heads = j.at("n_kv_heads").get<std::uint64_t>();
    m.rope_variant = variant_from_json(j.at("rope_variant"));
    for (const auto& f : j.at("files")) {
      ManifestEntry e;
      e.layer = f.at("layer").get<std::uint32_t>();
      e.head = f.at("head").get<std::uint32_t>();
      e.role = role_from_string(f.at("role").get<std::string>());
      e.phase = phase_from_string(f.at("pre_post").get<std::string>());
      e.path = f.at("path").get<std::string>();
      e.sha256 = f.at("sha256").get<std::string>();
      m.files.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ManifestError("cannot write manifest " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

struct ManifestIssue {
  std::size_t index = 0;
  std::string path;
  std::string problem;
};

struct ManifestReport {
  std::size_t entries = 0;
  std::vector<ManifestIssue> issues;
  bool valid() const { return issues.empty(); }
};

// Checks every entry (existence, header agreement, checksum) and collects all
// problems instead of stopping at the first. Throws ManifestError only when
// the manifest itself cannot be read.
inline ManifestReport validate_manifest(const std::filesystem::path& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  ManifestReport report;
  report.entries = m.files.size();
  for (std::size_t i = 0; i < m.files.size(); ++i) {
    const auto& e = m.files[i];
    const auto p = base / e.path;
    auto fail = [&](const std::string& why) { report.issues.push_back({i, e.path, why}); };
    if (!std::filesystem::exists(p)) {
      fail("missing file");
      continue;
    }
    if (e.layer >= m.n_layers) fail("layer out of range");
    const auto head_limit = e.role == Role::key ? m.n_kv_heads : m.n_query_heads;
    if (e.head >= head_limit) fail("head out of range");
    try {
      DumpHeader h;
      read_dump_payload_bits(p, &h);
      if (h.layer != e.layer || h.head != e.head || h.role != e.role || h.phase != e.phase)
        fail("header does not match manifest entry");
      if (h.d != m.head_dim) fail("header head_dim does not match manifest");
    } catch (const DumpError& err) {
      fail(std::string("unreadable dump: ") + err.what());
    }
    if (sha256_file(p) != e.sha256) fail("checksum mismatch");
  }
  return report;
}

}  // namespace ropegeom

#endif  // ROPEGEOM_MANIFEST_HPP
