// Copyright 2026 The ropegeom Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ROPEGEOM_SCHEDULE_HPP
#define ROPEGEOM_SCHEDULE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ropegeom {

// theta_k = base_theta^(-2(k-1)/d) on every plane.
struct StandardConfig {
  double base_theta = 10000.0;
};

// Every plane completes at least one cycle within train_len tokens. By default
// log-frequencies interpolate from 1 (the standard fastest plane) down to
// 2*pi/train_len. Setting base_theta switches to a standard schedule with that
// base instead (652 is the usual choice for a 4096-token window).
struct HighFrequencyConfig {
  std::int64_t train_len = 4096;
  std::optional<double> base_theta;
};

// Standard rotation restricted to the leading round(fraction * d/2) planes;
// frequencies span the full standard range over the rotated width.
struct PartialConfig {
  double base_theta = 500000.0;
  double fraction = 0.5;
};

// High-frequency rotation on a fraction of planes: log-frequencies go from one
// cycle per max_wavelength_tokens down to cycles_per_train_len cycles per
// train_len tokens.
struct RopeIdConfig {
  std::int64_t train_len = 4096;
  std::int64_t max_wavelength_tokens = 32;
  std::int64_t cycles_per_train_len = 2;
  double fraction = 0.5;
};

using RopeVariantConfig = std::variant<StandardConfig, HighFrequencyConfig, PartialConfig, RopeIdConfig>;

enum class VariantKind { standard, high_frequency, partial, rope_id };

inline VariantKind kind_of(const RopeVariantConfig& c) {
  return static_cast<VariantKind>(c.index());
}

inline std::string variant_name(const RopeVariantConfig& c) {
  switch (kind_of(c)) {
    case VariantKind::standard: return "standard";
    case VariantKind::high_frequency: return "high-frequency";
    case VariantKind::partial: return "partial";
    case VariantKind::rope_id: return "rope-id";
  }
  return "unknown";
}

class FrequencySchedule {
 public:
  FrequencySchedule(std::vector<double> frequencies, std::size_t rotated_planes,
                    RopeVariantConfig variant)
      : frequencies_(std::move(frequencies)), rotated_planes_(rotated_planes),
        variant_(std::move(variant)) {
    if (frequencies_.empty())
      throw std::invalid_argument("FrequencySchedule: needs at least one plane");
    if (rotated_planes_ < 1 || rotated_planes_ > frequencies_.size())
      throw std::invalid_argument("FrequencySchedule: rotated_planes out of range");
    for (std::size_t k = 0; k < frequencies_.size(); ++k) {
      if (!(frequencies_[k] > 0.0) || !std::isfinite(frequencies_[k]))
        throw std::invalid_argument("FrequencySchedule: frequencies must be positive and finite");
      if (k > 0 && frequencies_[k] > frequencies_[k - 1])
        throw std::invalid_argument("FrequencySchedule: frequencies must be non-increasing");
    }
  }

  std::size_t head_dim() const noexcept { return 2 * frequencies_.size(); }
  std::size_t planes() const noexcept { return frequencies_.size(); }
  std::size_t rotated_planes() const noexcept { return rotated_planes_; }
  bool rotates(std::size_t plane) const noexcept { return plane < rotated_planes_; }
  const std::vector<double>& frequencies() const noexcept { return frequencies_; }
  double frequency(std::size_t plane) const { return frequencies_.at(plane); }
  const RopeVariantConfig& variant() const noexcept { return variant_; }

  // Tokens per full cycle of a plane, 2*pi / theta_k.
  double wavelength(std::size_t plane) const { return 2.0 * std::numbers::pi / frequency(plane); }

 private:
  std::vector<double> frequencies_;
  std::size_t rotated_planes_;
  RopeVariantConfig variant_;
};

namespace detail {

inline std::vector<double> standard_frequencies(double base, std::size_t planes) {
  std::vector<double> f(planes);
  const double d = 2.0 * static_cast<double>(planes);
  for (std::size_t k = 0; k < planes; ++k) f[k] = std::pow(base, -2.0 * static_cast<double>(k) / d);
  return f;
}

// Uniform in log-frequency from `fast` (plane 0) to `slow` (last plane).
inline std::vector<double> log_interpolated(double fast, double slow, std::size_t planes) {
  if (planes == 1) return {fast};
  std::vector<double> f(planes);
  const double lo = std::log(fast);
  const double hi = std::log(slow);
  for (std::size_t k = 0; k < planes; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(planes - 1);
    f[k] = std::exp(t * (hi - lo) + lo);
  }
  f.front() = fast;
  f.back() = slow;
  return f;
}

inline std::size_t rotated_count(double fraction, std::size_t planes) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("build_schedule: fraction must lie in (0, 1]");
  const double r = std::round(fraction * static_cast<double>(planes));
  if (r < 1.0) throw std::invalid_argument("build_schedule: fraction selects zero planes");
  return static_cast<std::size_t>(r);
}

// Identity planes keep the slowest rotated frequency so the list stays
// positive and non-increasing.
inline std::vector<double> padded(std::vector<double> rotated, std::size_t planes) {
  const double tail = rotated.back();
  rotated.resize(planes, tail);
  return rotated;
}

}  // namespace detail

inline FrequencySchedule build_schedule(const RopeVariantConfig& config, std::size_t head_dim) {
  if (head_dim < 2 || head_dim % 2 != 0)
    throw std::invalid_argument("build_schedule: head_dim must be even and >= 2");
  const std::size_t planes = head_dim / 2;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  return std::visit(
      [&](const auto& c) -> FrequencySchedule {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, StandardConfig>) {
          if (!(c.base_theta > 0.0)) throw std::invalid_argument("build_schedule: base_theta must be positive");
          return {detail::standard_frequencies(c.base_theta, planes), planes, c};
        } else if constexpr (std::is_same_v<T, HighFrequencyConfig>) {
          if (c.train_len <= 0) throw std::invalid_argument("build_schedule: train_len must be positive");
          if (c.base_theta) {
            if (!(*c.base_theta > 0.0)) throw std::invalid_argument("build_schedule: base_theta must be positive");
            return {detail::standard_frequencies(*c.base_theta, planes), planes, c};
          }
          const double slow = two_pi / static_cast<double>(c.train_len);
          if (planes == 1) return {{slow}, 1, c};
          if (slow > 1.0) throw std::invalid_argument("build_schedule: train_len shorter than one radian cycle");
          return {detail::log_interpolated(1.0, slow, planes), planes, c};
        } else if constexpr (std::is_same_v<T, PartialConfig>) {
          if (!(c.base_theta > 0.0)) throw std::invalid_argument("build_schedule: base_theta must be positive");
          const std::size_t r = detail::rotated_count(c.fraction, planes);
          return {detail::padded(detail::standard_frequencies(c.base_theta, r), planes), r, c};
        } else {
          if (c.train_len <= 0) throw std::invalid_argument("build_schedule: train_len must be positive");
          if (c.max_wavelength_tokens <= 0 || c.cycles_per_train_len <= 0)
            throw std::invalid_argument("build_schedule: wavelength and cycle count must be positive");
          const double fast = two_pi / static_cast<double>(c.max_wavelength_tokens);
          const double slow = static_cast<double>(c.cycles_per_train_len) * two_pi /
                              static_cast<double>(c.train_len);
          if (slow > fast)
            throw std::invalid_argument("build_schedule: max wavelength exceeds train_len / cycles");
          const std::size_t r = detail::rotated_count(c.fraction, planes);
          return {detail::padded(detail::log_interpolated(fast, slow, r), planes), r, c};
        }
      },
      config);
}

}  // namespace ropegeom

#endif  // ROPEGEOM_SCHEDULE_HPP
