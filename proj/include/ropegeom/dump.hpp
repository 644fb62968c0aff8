// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_DUMP_HPP
#define ROPEGEOM_DUMP_HPP

// .rkq latent dump: a fixed 48-byte little-endian header followed by an
// n x d row-major float32 payload. See FORMAT.md for the byte layout.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ropegeom/cloud.hpp"

namespace ropegeom {

inline constexpr std::array<char, 4> kDumpMagic = {'R', 'K', 'Q', '1'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::size_t kDumpHeaderSize = 48;

enum class DType : std::uint32_t { f32 = 0 };
enum class ChannelLayout : std::uint32_t { canonical_interleaved = 0 };

struct DumpHeader {
  std::uint32_t version = kDumpVersion;
  DType dtype = DType::f32;
  Role role = Role::key;
  RopePhase phase = RopePhase::pre_rope;
  std::uint32_t layer = 0;
  std::uint32_t head = 0;
  ChannelLayout layout = ChannelLayout::canonical_interleaved;
  std::uint64_t n = 0;
  std::uint64_t d = 0;

  std::uint64_t payload_bytes() const { return n * d * 4; }
  friend bool operator==(const DumpHeader&, const DumpHeader&) = default;
};

enum class DumpErrorKind {
  io,
  bad_magic,
  unsupported_version,
  unsupported_dtype,
  unsupported_layout,
  invalid_header,
  size_mismatch,
  already_exists,
};

inline const char* to_string(DumpErrorKind k) {
  switch (k) {
    case DumpErrorKind::io: return "io";
    case DumpErrorKind::bad_magic: return "bad_magic";
    case DumpErrorKind::unsupported_version: return "unsupported_version";
    case DumpErrorKind::unsupported_dtype: return "unsupported_dtype";
    case DumpErrorKind::unsupported_layout: return "unsupported_layout";
    case DumpErrorKind::invalid_header: return "invalid_header";
    case DumpErrorKind::size_mismatch: return "size_mismatch";
    case DumpErrorKind::already_exists: return "already_exists";
  }
  return "unknown";
}

class DumpError : public std::runtime_error {
 public:
  DumpError(DumpErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  DumpErrorKind kind() const noexcept { return kind_; }

 private:
  DumpErrorKind kind_;
};

namespace detail {

inline void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
inline void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::array<unsigned char, kDumpHeaderSize> encode_header(const DumpHeader& h) {
  std::array<unsigned char, kDumpHeaderSize> b{};
  std::memcpy(b.data(), kDumpMagic.data(), 4);
  detail::put_u32(b.data() + 4, h.version);
  detail::put_u32(b.data() + 8, static_cast<std::uint32_t>(h.dtype));
  detail::put_u32(b.data() + 12, static_cast<std::uint32_t>(h.role));
  detail::put_u32(b.data() + 16, static_cast<std::uint32_t>(h.phase));
  detail::put_u32(b.data() + 20, h.layer);
  detail::put_u32(b.data() + 24, h.head);
  detail::put_u32(b.data() + 28, static_cast<std::uint32_t>(h.layout));
  detail::put_u64(b.data() + 32, h.n);
  detail::put_u64(b.data() + 40, h.d);
  return b;
}

inline DumpHeader decode_header(const unsigned char* b) {
  if (std::memcmp(b, kDumpMagic.data(), 4) != 0) throw DumpError(DumpErrorKind::bad_magic, "expected RKQ1");
  DumpHeader h;
  h.version = detail::get_u32(b + 4);
  if (h.version != kDumpVersion)
    throw DumpError(DumpErrorKind::unsupported_version, "version " + std::to_string(h.version));
  const auto dtype = detail::get_u32(b + 8);
  if (dtype != static_cast<std::uint32_t>(DType::f32))
    throw DumpError(DumpErrorKind::unsupported_dtype, "dtype " + std::to_string(dtype));
  const auto role = detail::get_u32(b + 12);
  const auto phase = detail::get_u32(b + 16);
  if (role > 1 || phase > 1) throw DumpError(DumpErrorKind::invalid_header, "role/pre_post out of range");
  h.role = static_cast<Role>(role);
  h.phase = static_cast<RopePhase>(phase);
  h.layer = detail::get_u32(b + 20);
  h.head = detail::get_u32(b + 24);
  const auto layout = detail::get_u32(b + 28);
  if (layout != static_cast<std::uint32_t>(ChannelLayout::canonical_interleaved))
    throw DumpError(DumpErrorKind::unsupported_layout, "layout " + std::to_string(layout));
  h.n = detail::get_u64(b + 32);
  h.d = detail::get_u64(b + 40);
  if (h.n == 0 || h.d == 0 || h.d % 2 != 0)
    throw DumpError(DumpErrorKind::invalid_header, "n must be >= 1 and d even");
  if (h.d > std::numeric_limits<std::uint64_t>::max() / 4 / h.n)
    throw DumpError(DumpErrorKind::invalid_header, "n * d overflows");
  return h;
}

inline DumpHeader header_for(const LatentCloud& cloud) {
  DumpHeader h;
  h.role = cloud.meta().role;
  h.phase = cloud.meta().phase;
  h.layer = cloud.meta().layer;
  h.head = cloud.meta().head;
  h.n = cloud.size();
  h.d = cloud.dim();
  return h;
}

enum class WriteMode { fail_if_exists, overwrite };

// Writes header + payload to a sibling temp file, then renames it into place.
inline void write_dump(const std::filesystem::path& path, const LatentCloud& cloud, const DumpHeader& header,
                       WriteMode mode = WriteMode::fail_if_exists) {
  if (header.n != cloud.size() || header.d != cloud.dim())
    throw DumpError(DumpErrorKind::invalid_header, "header dimensions do not match cloud");
  if (header.dtype != DType::f32 || header.layout != ChannelLayout::canonical_interleaved ||
      header.version != kDumpVersion)
    throw DumpError(DumpErrorKind::invalid_header, "only version 1, f32, canonical layout can be written");
  if (mode == WriteMode::fail_if_exists && std::filesystem::exists(path))
    throw DumpError(DumpErrorKind::already_exists, path.string());

  std::vector<unsigned char> buf(kDumpHeaderSize + header.payload_bytes());
  const auto hdr = encode_header(header);
  std::memcpy(buf.data(), hdr.data(), hdr.size());
  unsigned char* p = buf.data() + kDumpHeaderSize;
  for (double x : cloud.data().data()) {
    detail::put_u32(p, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    p += 4;
  }

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DumpError(DumpErrorKind::io, "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DumpError(DumpErrorKind::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DumpError(DumpErrorKind::io, "rename failed: " + ec.message());
}

inline void write_dump(const std::filesystem::path& path, const LatentCloud& cloud,
                       WriteMode mode = WriteMode::fail_if_exists) {
  write_dump(path, cloud, header_for(cloud), mode);
}

inline DumpHeader read_dump_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DumpError(DumpErrorKind::io, "cannot open " + path.string());
  std::array<unsigned char, kDumpHeaderSize> b{};
  in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (in.gcount() < 4) throw DumpError(DumpErrorKind::size_mismatch, "file shorter than magic");
  if (std::memcmp(b.data(), kDumpMagic.data(), 4) != 0) throw DumpError(DumpErrorKind::bad_magic, "expected RKQ1");
  if (in.gcount() != static_cast<std::streamsize>(b.size()))
    throw DumpError(DumpErrorKind::size_mismatch, "truncated header");
  return decode_header(b.data());
}

// Raw f32 payload words, exactly as stored.
inline std::vector<std::uint32_t> read_dump_payload_bits(const std::filesystem::path& path, DumpHeader* header = nullptr) {
  const DumpHeader h = read_dump_header(path);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw DumpError(DumpErrorKind::io, ec.message());
  if (size != kDumpHeaderSize + h.payload_bytes())
    throw DumpError(DumpErrorKind::size_mismatch, "expected " + std::to_string(kDumpHeaderSize + h.payload_bytes()) +
                                                      " bytes, found " + std::to_string(size));
  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(kDumpHeaderSize));
  std::vector<unsigned char> raw(h.payload_bytes());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw DumpError(DumpErrorKind::size_mismatch, "short payload read");
  std::vector<std::uint32_t> bits(h.n * h.d);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = detail::get_u32(raw.data() + 4 * i);
  if (header) *header = h;
  return bits;
}

inline LatentCloud read_dump(const std::filesystem::path& path) {
  DumpHeader h;
  const auto bits = read_dump_payload_bits(path, &h);
  std::vector<double> values(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) values[i] = static_cast<double>(std::bit_cast<float>(bits[i]));
  CloudMeta meta;
  meta.layer = h.layer;
  meta.head = h.head;
  meta.role = h.role;
  meta.phase = h.phase;
  return LatentCloud(Matrix(h.n, h.d, std::move(values)), std::move(meta));
}

}  // namespace ropegeom

#endif  // ROPEGEOM_DUMP_HPP
