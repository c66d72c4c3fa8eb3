#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/models.hpp"
#include "dualview/arch/network.hpp"
#include "dualview/arch/plan.hpp"
#include "dualview/arch/spec.hpp"
#include "dualview/core/error.hpp"
#include "dualview/paths/paths.hpp"

namespace dualview {

/// Circular rotation: rot(x, r)(i) = x(i (+) r).
inline Vec rot(std::span<const double> x, std::size_t r) {
  const std::size_t n = x.size();
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[(i + r) % n];
  return out;
}

/// Scale constants attached to the kernel limits.
struct KernelConstants {
  double sigma_fc = 0.0;
  double sigma_cv = 0.0;
  double beta_cv = 0.0;

  static KernelConstants from(const ArchSpec& arch) {
    KernelConstants k;
    k.sigma_fc = arch.c_scale / std::sqrt(double(arch.width));
    k.sigma_cv = arch.c_scale / std::sqrt(double(arch.width * arch.conv_window));
    if (arch.family == Family::CONV_GAP) {
      const double dcv = double(arch.conv_layers), dfc = double(arch.fc_layers);
      k.beta_cv = dcv * std::pow(k.sigma_cv, 2.0 * (dcv - 1)) * std::pow(k.sigma_fc, 2.0 * dfc) +
                  dfc * std::pow(k.sigma_cv, 2.0 * dcv) * std::pow(k.sigma_fc, 2.0 * (dfc - 1));
    }
    return k;
  }

  /// d * sigma^(2(d-1)) for a fully connected network of depth d.
  static double beta_fc(std::size_t depth, double sigma) {
    return double(depth) * std::pow(sigma, 2.0 * (double(depth) - 1.0));
  }

  /// (|J|+2) d_blk * sigma^(2((|J|+2) d_blk - 1)).
  double beta_res(std::size_t included, std::size_t block_depth) const {
    return beta_fc((included + 2) * block_depth, sigma_fc);
  }
};

// ---------------------------------------------------------------------------
// Fully connected

/// <x, x'> * prod_l <G_l(x), G_l(x')> over the non-pooling gate layers.
inline double npk_fc(std::span<const double> x, std::span<const double> xp, const GateTensor& gates_x,
                     const GateTensor& gates_xp) {
  detail::require(gates_x.size() == gates_xp.size(), "npk_fc: gate tensors have different depth");
  double k = dot(x, xp);
  for (std::size_t l = 0; l < gates_x.size(); ++l) {
    if (gates_x.is_pool(l)) continue;
    detail::require(gates_x[l].size() == gates_xp[l].size(), "npk_fc: gate layer shapes differ");
    k *= dot(gates_x[l], gates_xp[l]);
  }
  return k;
}

/// Per-layer base kernels <G_l(x), G_l(x')> / w, multiplied (the width
/// normalised product kernel).
inline double npk_fc_normalized(std::span<const double> x, std::span<const double> xp, const GateTensor& gates_x,
                                const GateTensor& gates_xp, std::size_t width) {
  double k = dot(x, xp);
  for (std::size_t l = 0; l < gates_x.size(); ++l) k *= dot(gates_x[l], gates_xp[l]) / double(width);
  return k;
}

/// Product of the per-layer gate correlations, multiplied in the given layer
/// order (order only matters through floating-point rounding).
inline double gate_correlation_product(const GateTensor& gates_x, const GateTensor& gates_xp,
                                       std::span<const std::size_t> order) {
  double k = 1.0;
  for (auto l : order) k *= dot(gates_x[l], gates_xp[l]);
  return k;
}

// ---------------------------------------------------------------------------
// Path weights by dynamic programming

/// D(i) = sum over paths p starting at input i of the product along p of
/// h = gates_x * gates_xp (elementwise). With pool_as_one the pooling mask
/// contributes 1 instead of its square, and hard gates then give
/// D(i) = overlap(i, x, x').
///
/// The value network with all weights 1 and gates h is linear in its input
/// with coefficients D, so D is its input gradient.
inline Vec path_weight_profile(const NetPlan& plan, const GateTensor& gates_x, const GateTensor& gates_xp,
                               bool pool_as_one) {
  detail::require(plan.output_size == 1, "path_weight_profile: needs a scalar-output plan");
  detail::require(gates_x.size() == plan.gate_count() && gates_xp.size() == plan.gate_count(),
                  "path_weight_profile: gate tensor does not match the plan");
  std::vector<Vec> h(plan.gate_count());
  for (std::size_t g = 0; g < plan.gate_count(); ++g) {
    detail::require(gates_x[g].size() == plan.gate_sizes[g] && gates_xp[g].size() == plan.gate_sizes[g],
                    "path_weight_profile: gate layer " + std::to_string(g) + " has the wrong size");
    h[g].resize(plan.gate_sizes[g]);
    const bool pool = plan.pool_gate && *plan.pool_gate == g;
    for (std::size_t i = 0; i < h[g].size(); ++i) h[g][i] = pool && pool_as_one ? 1.0 : gates_x[g][i] * gates_xp[g][i];
  }
  const ParamSet ones = ParamSet::filled(plan, 1.0);
  const Vec probe(plan.input_size, 0.0);
  const Trace t = propagate(plan, ones, probe, [&](std::size_t l, const Vec&) { return h[*plan.layers[l].gate]; });
  Vec d_input;
  const Vec d_out{1.0};
  backpropagate(plan, ones, t, d_out, nullptr, nullptr, nullptr, &d_input);
  return d_input;
}

/// overlap(i, x, x') for all i via path_weight_profile (hard gates only).
inline Vec overlap_profile(const NetPlan& plan, const GateTensor& gates_x, const GateTensor& gates_xp) {
  if (gates_x.mode != GateMode::Hard || gates_xp.mode != GateMode::Hard)
    throw InvalidArgument("overlap_profile: overlap counts need hard gates");
  return path_weight_profile(plan, gates_x, gates_xp, true);
}

/// Path-level kernel <x, x'>_D = sum_i x(i) x'(i) D(i) with D from
/// path_weight_profile (pooling factors included). Equals the inner product
/// of unbundled path features for every family.
inline double npk_paths(const NetPlan& plan, std::span<const double> x, std::span<const double> xp,
                        const GateTensor& gates_x, const GateTensor& gates_xp) {
  const Vec d = path_weight_profile(plan, gates_x, gates_xp, false);
  double k = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) k += x[i] * xp[i] * d[i];
  return k;
}

// ---------------------------------------------------------------------------
// Convolution with global average pooling

/// Produces hard gates for an arbitrary input (usually a feature network).
using GateProvider = std::function<GateTensor(std::span<const double>)>;

/// sum_{r=0}^{d_in-1} <x, rot(x', r)>_{overlap(., x, rot(x', r))}, with
/// integer overlap counts. The value-network inputs x_v, x_v' are weighted;
/// the gates come from provider(x_f) and provider(rot(x_f', r)).
/// With activities that carry the 1/d_in pooling mask this equals
/// d_in^2 * <phi(x), phi(x')> over bundles.
inline double npk_conv_rotsum(const ArchSpec& arch, std::span<const double> x_v, std::span<const double> xp_v,
                              std::span<const double> x_f, std::span<const double> xp_f,
                              const GateProvider& provider) {
  detail::require(arch.family == Family::CONV_GAP, "npk_conv_rotsum: family must be CONV_GAP");
  const NetPlan plan = build_plan(arch);
  const GateTensor gx = provider(x_f);
  double total = 0.0;
  for (std::size_t r = 0; r < arch.d_in; ++r) {
    const Vec yv = rot(xp_v, r);
    const GateTensor gy = provider(rot(xp_f, r));
    const Vec ov = overlap_profile(plan, gx, gy);
    for (std::size_t i = 0; i < arch.d_in; ++i) total += x_v[i] * yv[i] * ov[i];
  }
  return total;
}

/// Same-input convenience form (x_v = x_f).
inline double npk_conv_rotsum(const ArchSpec& arch, std::span<const double> x, std::span<const double> xp,
                              const GateProvider& provider) {
  return npk_conv_rotsum(arch, x, xp, x, xp, provider);
}

// ---------------------------------------------------------------------------
// Residual networks

struct EnsembleTerm {
  std::uint32_t mask = 0;
  std::size_t included = 0;
  double npk = 0.0;
};

struct EnsembleNpk {
  double total = 0.0;
  std::vector<EnsembleTerm> terms;
};

/// NPK^RES = sum over sub-FCNs J of <x, x'> prod_{l in J} <G_l(x), G_l(x')>.
/// `excluded` masks out sub-FCNs that pass through the listed skippable
/// blocks (bit j set = drop every sub-FCN using block j).
inline EnsembleNpk npk_res_ensemble(const ArchSpec& arch, std::span<const double> x, std::span<const double> xp,
                                    const GateTensor& gates_x, const GateTensor& gates_xp,
                                    std::uint32_t excluded = 0) {
  detail::require(arch.family == Family::RES, "npk_res_ensemble: family must be RES");
  EnsembleNpk e;
  const double base = dot(x, xp);
  for (const auto& sub : enumerate_subfcns(arch)) {
    if (sub.mask & excluded) continue;
    double k = base;
    for (auto g : sub.gates) k *= dot(gates_x[g], gates_xp[g]);
    e.terms.push_back({sub.mask, sub.included(), k});
    e.total += k;
  }
  return e;
}

}  // namespace dualview
