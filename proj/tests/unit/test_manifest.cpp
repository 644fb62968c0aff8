// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "ropegeom/manifest.hpp"
#include "support.hpp"

using namespace ropegeom;
namespace fs = std::filesystem;

namespace {

// Ten key/query files across two layers and heads.
fs::path ten_file_manifest(const fs::path& dir) {
  Manifest m;
  m.model_name = "unit";
  m.train_len = 128;
  m.head_dim = 4;
  m.n_layers = 2;
  m.n_query_heads = 4;
  m.n_kv_heads = 2;
  m.rope_variant = RopeIdConfig{128, 8, 2, 0.5};
  for (std::uint32_t i = 0; i < 10; ++i) {
    CloudMeta meta;
    meta.layer = i % 2;
    meta.head = (i / 2) % 2;
    meta.role = i < 4 ? Role::key : Role::query;
    meta.phase = i % 4 < 2 ? RopePhase::pre_rope : RopePhase::post_rope;
    if (meta.role == Role::query) meta.head = (i / 2) % 4;
    std::vector<double> vals(8);
    for (std::size_t k = 0; k < 8; ++k) vals[k] = static_cast<double>(i * 8 + k);
    const std::string name = "f" + std::to_string(i) + ".rkq";
    write_dump(dir / name, LatentCloud(Matrix(2, 4, vals), meta));
    m.files.push_back({meta.layer, meta.head, meta.role, meta.phase, name, sha256_file(dir / name)});
  }
  save_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, JsonRoundTrip) {
  const auto dir = testing_support::scratch_dir("manifest_roundtrip");
  const auto path = ten_file_manifest(dir);
  const Manifest m = load_manifest(path);
  EXPECT_EQ(m.files.size(), 10u);
  EXPECT_EQ(manifest_to_json(m), manifest_to_json(manifest_from_json(manifest_to_json(m))));
  for (const auto& v : std::vector<RopeVariantConfig>{StandardConfig{123.0}, HighFrequencyConfig{2048, 652.0},
                                                      HighFrequencyConfig{2048, std::nullopt},
                                                      PartialConfig{5.0, 0.25}, RopeIdConfig{64, 4, 3, 0.75}})
    EXPECT_EQ(variant_to_json(variant_from_json(variant_to_json(v))), variant_to_json(v));
  EXPECT_THROW(variant_from_json({{"kind", "yarn"}}), ManifestError);
}

TEST(Manifest, ValidManifestHasNoIssues) {
  const auto dir = testing_support::scratch_dir("manifest_valid");
  const auto report = validate_manifest(ten_file_manifest(dir));
  EXPECT_TRUE(report.valid());
  EXPECT_EQ(report.entries, 10u);
}

TEST(Manifest, EmptyFileListIsValid) {
  const auto dir = testing_support::scratch_dir("manifest_empty");
  Manifest m;
  m.model_name = "empty";
  m.head_dim = 8;
  save_manifest(dir / "manifest.json", m);
  const auto report = validate_manifest(dir / "manifest.json");
  EXPECT_TRUE(report.valid());
  EXPECT_EQ(report.entries, 0u);
}

TEST(Manifest, CorruptedChecksumNamesExactlyThatEntry) {
  const auto dir = testing_support::scratch_dir("manifest_checksum");
  const auto path = ten_file_manifest(dir);
  {
    std::fstream f(dir / "f6.rkq", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(50);
    f.put('\x7F');
  }
  const auto report = validate_manifest(path);
  ASSERT_EQ(report.issues.size(), 1u);
  EXPECT_EQ(report.issues[0].index, 6u);
  EXPECT_EQ(report.issues[0].path, "f6.rkq");
  EXPECT_EQ(report.issues[0].problem, "checksum mismatch");
}

TEST(Manifest, DanglingPathIsReported) {
  const auto dir = testing_support::scratch_dir("manifest_dangling");
  const auto path = ten_file_manifest(dir);
  fs::remove(dir / "f3.rkq");
  const auto report = validate_manifest(path);
  ASSERT_EQ(report.issues.size(), 1u);
  EXPECT_EQ(report.issues[0].path, "f3.rkq");
  EXPECT_EQ(report.issues[0].problem, "missing file");
}

TEST(Manifest, HeaderDisagreementAndRanges) {
  const auto dir = testing_support::scratch_dir("manifest_header");
  const auto path = ten_file_manifest(dir);
  Manifest m = load_manifest(path);
  m.files[0].head = 1;  // file says head 0
  m.files[1].layer = 9;
  save_manifest(path, m);
  const auto report = validate_manifest(path);
  std::vector<std::string> problems;
  for (const auto& i : report.issues) problems.push_back(std::to_string(i.index) + ":" + i.problem);
  EXPECT_EQ(problems, (std::vector<std::string>{"0:header does not match manifest entry", "1:layer out of range",
                                                "1:header does not match manifest entry"}));
}

TEST(Manifest, UnreadableManifest) {
  const auto dir = testing_support::scratch_dir("manifest_bad");
  EXPECT_THROW(load_manifest(dir / "nope.json"), ManifestError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_manifest(dir / "bad.json"), ManifestError);
  std::ofstream(dir / "partial.json") << R"({"model_name": "x"})";
  EXPECT_THROW(load_manifest(dir / "partial.json"), ManifestError);
}
