#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/core/error.hpp"

namespace dualview {

enum class Family { FC, CONV_GAP, RES };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::FC: return "FC";
    case Family::CONV_GAP: return "CONV_GAP";
    case Family::RES: return "RES";
  }
  return "?";
}

inline Family family_from_string(std::string_view s) {
  if (s == "FC") return Family::FC;
  if (s == "CONV_GAP") return Family::CONV_GAP;
  if (s == "RES") return Family::RES;
  throw InvalidArgument("unknown architecture family '" + std::string(s) + "'");
}

namespace detail {
inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}
inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > UINT64_MAX - b ? UINT64_MAX : a + b; }
inline std::uint64_t sat_pow(std::uint64_t base, std::uint64_t e) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) r = sat_mul(r, base);
  return r;
}
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}
}  // namespace detail

/// Declarative description of one network. Fields irrelevant to the family
/// are ignored.
///
///   FC:       `depth` weight layers (depth-1 gated hidden layers of `width`).
///   CONV_GAP: `conv_layers` circular convolutions (window `conv_window`,
///             `width` filters), global average pooling, then `fc_layers`
///             dense layers, the last of which is the output.
///   RES:      (skips+2) dense blocks of `block_depth` layers; blocks
///             2..skips+1 carry identity shortcuts around them.
struct ArchSpec {
  Family family = Family::FC;
  std::size_t d_in = 2;
  std::size_t depth = 2;
  std::size_t width = 2;
  std::size_t conv_layers = 1;
  std::size_t conv_window = 2;
  std::size_t fc_layers = 1;
  std::size_t skips = 1;
  std::size_t block_depth = 1;
  double c_scale = 1.0;
  double beta = 10.0;
  std::size_t heads = 1;

  bool operator==(const ArchSpec&) const = default;

  void validate() const {
    using detail::require;
    require(d_in >= 1, "ArchSpec: d_in must be >= 1");
    require(width >= 1, "ArchSpec: width must be >= 1");
    require(heads >= 1, "ArchSpec: heads must be >= 1");
    require(c_scale > 0.0 && std::isfinite(c_scale), "ArchSpec: c_scale must be positive");
    require(beta > 0.0 && std::isfinite(beta), "ArchSpec: beta must be positive");
    switch (family) {
      case Family::FC: require(depth >= 1, "ArchSpec: FC depth must be >= 1"); break;
      case Family::CONV_GAP:
        require(conv_layers >= 1, "ArchSpec: conv_layers must be >= 1");
        require(fc_layers >= 1, "ArchSpec: fc_layers must be >= 1");
        require(conv_window >= 1 && conv_window < d_in, "ArchSpec: need 1 <= conv_window < d_in");
        break;
      case Family::RES: require(block_depth >= 1, "ArchSpec: block_depth must be >= 1"); break;
    }
  }

  /// Number of weight layers on the longest input-output route.
  std::size_t total_depth() const {
    switch (family) {
      case Family::FC: return depth;
      case Family::CONV_GAP: return conv_layers + fc_layers;
      case Family::RES: return (skips + 2) * block_depth;
    }
    return 0;
  }

  /// Path count (saturating at UINT64_MAX).
  std::uint64_t path_count() const {
    using namespace detail;
    switch (family) {
      case Family::FC: return sat_mul(d_in, sat_pow(width, depth - 1));
      case Family::CONV_GAP:
        return sat_mul(sat_mul(d_in, sat_pow(sat_mul(conv_window, width), conv_layers)),
                       sat_pow(width, fc_layers - 1));
      case Family::RES: {
        std::uint64_t total = 0;
        for (std::size_t i = 0; i <= skips; ++i)
          total = sat_add(total, sat_mul(binomial(skips, i), sat_pow(width, (i + 2) * block_depth - 1)));
        return sat_mul(d_in, total);
      }
    }
    return 0;
  }

  /// Bundle count for CONV_GAP (P / d_in); equals path_count() otherwise.
  std::uint64_t bundle_count() const {
    return family == Family::CONV_GAP ? path_count() / d_in : path_count();
  }
};

inline ArchSpec make_fc(std::size_t d_in, std::size_t depth, std::size_t width, double c_scale = 1.0) {
  ArchSpec a;
  a.family = Family::FC;
  a.d_in = d_in;
  a.depth = depth;
  a.width = width;
  a.c_scale = c_scale;
  return a;
}

inline ArchSpec make_conv(std::size_t d_in, std::size_t conv_layers, std::size_t window, std::size_t width,
                          std::size_t fc_layers, double c_scale = 1.0) {
  ArchSpec a;
  a.family = Family::CONV_GAP;
  a.d_in = d_in;
  a.conv_layers = conv_layers;
  a.conv_window = window;
  a.width = width;
  a.fc_layers = fc_layers;
  a.c_scale = c_scale;
  return a;
}

inline ArchSpec make_res(std::size_t d_in, std::size_t skips, std::size_t block_depth, std::size_t width,
                         double c_scale = 1.0) {
  ArchSpec a;
  a.family = Family::RES;
  a.d_in = d_in;
  a.skips = skips;
  a.block_depth = block_depth;
  a.width = width;
  a.c_scale = c_scale;
  return a;
}

}  // namespace dualview
