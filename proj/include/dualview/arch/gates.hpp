#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/arch/plan.hpp"
#include "dualview/core/error.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

enum class GateMode { Hard, Soft };

inline std::string_view to_string(GateMode m) { return m == GateMode::Hard ? "hard" : "soft"; }

inline GateMode gate_mode_from_string(std::string_view s) {
  if (s == "hard") return GateMode::Hard;
  if (s == "soft") return GateMode::Soft;
  throw InvalidArgument("unknown gate mode '" + std::string(s) + "'");
}

/// Hard: 1{q > 0} (so q == 0 gives 0). Soft: 1 / (1 + exp(-beta q)).
inline double gate_fn(double q, GateMode mode, double beta) {
  if (mode == GateMode::Hard) return q > 0.0 ? 1.0 : 0.0;
  const double t = beta * q;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// d gate / d q; zero for hard gates.
inline double gate_derivative(double q, GateMode mode, double beta) {
  if (mode == GateMode::Hard) return 0.0;
  const double g = gate_fn(q, mode, beta);
  return beta * g * (1.0 - g);
}

/// Per-layer gate values G_l(x), indexed by gate layer. The pooling mask of a
/// CONV_GAP network is one of the layers and holds 1/d_in everywhere.
struct GateTensor {
  GateMode mode = GateMode::Hard;
  std::vector<Vec> layers;
  std::optional<std::size_t> pool_layer;

  std::size_t size() const { return layers.size(); }
  const Vec& operator[](std::size_t l) const { return layers[l]; }

  bool is_pool(std::size_t l) const { return pool_layer && *pool_layer == l; }

  /// Checks the range invariants of the mode (hard in {0,1}, soft in (0,1),
  /// pooling entries equal to 1/positions).
  bool valid(std::size_t pool_positions = 0) const {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (double g : layers[l]) {
        if (is_pool(l)) {
          if (pool_positions > 0 && g != 1.0 / double(pool_positions)) return false;
          continue;
        }
        if (mode == GateMode::Hard && g != 0.0 && g != 1.0) return false;
        if (mode == GateMode::Soft && !(g > 0.0 && g < 1.0)) return false;
      }
    }
    return true;
  }
};

/// Constant pooling-mask values for a plan with global average pooling.
inline Vec pool_mask(const NetPlan& plan) {
  const auto& layer = plan.layers[plan.gate_layer[*plan.pool_gate]];
  return Vec(layer.gate_size(), 1.0 / double(layer.positions));
}

/// Layer-permuted gate routing and the constant-1 value-input switch.
///
/// Value-network gate layer l consumes feature gate layer perm[l]. The
/// pooling mask is never routed.
struct GateRouting {
  std::vector<std::size_t> perm;  // empty means identity
  bool constant_one_input = false;

  bool operator==(const GateRouting&) const = default;

  static GateRouting identity() { return {}; }

  std::size_t source(std::size_t l) const { return perm.empty() ? l : perm[l]; }

  void validate(const NetPlan& plan) const {
    if (perm.empty()) return;
    const std::size_t n = plan.gate_count();
    detail::require(perm.size() == n, "GateRouting: permutation length " + std::to_string(perm.size()) +
                                          " does not match " + std::to_string(n) + " gate layers");
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i)
      detail::require(sorted[i] == i, "GateRouting: not a permutation");
    for (std::size_t l = 0; l < n; ++l) {
      const bool pool = plan.pool_gate && (*plan.pool_gate == l || *plan.pool_gate == perm[l]);
      if (pool) {
        detail::require(perm[l] == l, "GateRouting: the pooling mask cannot be permuted");
        continue;
      }
      detail::require(plan.gate_sizes[l] == plan.gate_sizes[perm[l]],
                      "GateRouting: layers " + std::to_string(l) + " and " + std::to_string(perm[l]) +
                          " have different gate shapes");
    }
  }

  /// Gates as seen by the value network.
  GateTensor apply(const GateTensor& gates) const {
    if (perm.empty()) return gates;
    GateTensor out = gates;
    for (std::size_t l = 0; l < gates.size(); ++l) out.layers[l] = gates.layers[perm[l]];
    return out;
  }
};

/// All permutations of the gate layers that `plan` allows to be swapped
/// (equal gate shapes, pooling fixed), identity first.
inline std::vector<std::vector<std::size_t>> admissible_permutations(const NetPlan& plan) {
  std::vector<std::size_t> movable;
  for (std::size_t l = 0; l < plan.gate_count(); ++l)
    if (!(plan.pool_gate && *plan.pool_gate == l)) movable.push_back(l);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> order = movable;
  do {
    std::vector<std::size_t> perm(plan.gate_count());
    std::iota(perm.begin(), perm.end(), 0);
    bool ok = true;
    for (std::size_t i = 0; i < movable.size(); ++i) {
      perm[movable[i]] = order[i];
      ok = ok && plan.gate_sizes[movable[i]] == plan.gate_sizes[order[i]];
    }
    if (ok) out.push_back(perm);
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

}  // namespace dualview
