#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/models.hpp"
#include "dualview/arch/params.hpp"
#include "dualview/arch/plan.hpp"
#include "dualview/core/parallel.hpp"
#include "dualview/core/rng.hpp"
#include "dualview/core/stats.hpp"
#include "dualview/kernels/npk.hpp"

namespace dualview {

/// <grad y(x), grad y(x')> over the selected parameters of a model.
inline double ntk(const Model& model, std::span<const double> x, std::span<const double> xp,
                  ParamSubset subset = ParamSubset::Value) {
  return dot(grad(model, subset, x), grad(model, subset, xp));
}

/// Value-weight NTK of a gated network with both gate tensors held fixed.
inline double ntk_fixed_gates(const NetPlan& plan, const ParamSet& params_v, const GateTensor& gates_x,
                              const GateTensor& gates_xp, std::span<const double> x_v, std::span<const double> xp_v,
                              const GateRouting& routing = {}) {
  return dot(value_grad(plan, params_v, gates_x, routing, x_v), value_grad(plan, params_v, gates_xp, routing, xp_v));
}

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  Vec values;  // per-sample NTK values, in sample order

  /// |mean - target| in standard errors (infinite if the error is 0 and they differ).
  double z_score(double target) const {
    const double diff = std::abs(mean - target);
    if (standard_error == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
    return diff / standard_error;
  }
};

/// Monte-Carlo mean of the value-weight NTK over i.i.d. Bernoulli(+-sigma)
/// value networks, with the gates of both inputs frozen. Sample s draws its
/// weights from Rng(seed, s), so results do not depend on the thread count.
/// `sigmas` gives one scale per value tensor (default layer_sigmas(arch)).
inline McEstimate ntk_expectation_mc(const ArchSpec& arch, const GateTensor& gates_x, const GateTensor& gates_xp,
                                     std::span<const double> x_v, std::span<const double> xp_v,
                                     std::size_t n_samples, std::uint64_t seed,
                                     std::optional<std::vector<double>> sigmas = std::nullopt,
                                     const GateRouting& routing = {}) {
  detail::require(n_samples >= 2, "ntk_expectation_mc: need at least 2 samples");
  const NetPlan plan = build_plan(arch);
  const std::vector<double> scales = sigmas.value_or(layer_sigmas(arch, plan));
  detail::require(scales.size() == plan.param_shapes.size(), "ntk_expectation_mc: one sigma per value tensor");
  for (double s : scales) detail::require(s > 0.0 && std::isfinite(s), "ntk_expectation_mc: sigma must be positive");
  McEstimate est;
  est.values.assign(n_samples, 0.0);
  const Vec xv(x_v.begin(), x_v.end()), xpv(xp_v.begin(), xp_v.end());
  parallel_for(n_samples, [&](std::size_t s) {
    Rng rng(seed, s);
    const ParamSet params = init_params(plan, scales, rng);
    est.values[s] = ntk_fixed_gates(plan, params, gates_x, gates_xp, xv, xpv, routing);
  });
  RunningStats stats;
  for (double v : est.values) stats.add(v);
  est.mean = stats.mean();
  est.standard_error = stats.stderr_of_mean();
  est.samples = n_samples;
  return est;
}

/// Closed-form expectation of the fixed-gate value NTK.
///
///   FC:   d sigma^(2(d-1)) <x, x'> prod_l <G_l, G_l'>
///   RES:  sum_J beta_res^J NPK_J
///   CONV: beta_cv / d_in^2 * rotation sum (needs a gate provider, since the
///         rotation sum uses the gates of every rotation of x')
///
/// Gates are taken after routing. `sigma_scale` multiplies every sigma in
/// the constants (1 for the true target).
struct NtkTarget {
  double value = 0.0;        // full constant form
  double unnormalized = 0.0; // the NPK without its scale constant
  double constant = 0.0;     // value / unnormalized
};

inline NtkTarget ntk_target_fc(const ArchSpec& arch, std::span<const double> x_v, std::span<const double> xp_v,
                               const GateTensor& gates_x, const GateTensor& gates_xp, double sigma_scale = 1.0) {
  detail::require(arch.family == Family::FC, "ntk_target_fc: family must be FC");
  NtkTarget t;
  t.unnormalized = npk_fc(x_v, xp_v, gates_x, gates_xp);
  t.constant = KernelConstants::beta_fc(arch.depth, sigma_scale * KernelConstants::from(arch).sigma_fc);
  t.value = t.constant * t.unnormalized;
  return t;
}

inline NtkTarget ntk_target_res(const ArchSpec& arch, std::span<const double> x_v, std::span<const double> xp_v,
                                const GateTensor& gates_x, const GateTensor& gates_xp, double sigma_scale = 1.0) {
  const EnsembleNpk e = npk_res_ensemble(arch, x_v, xp_v, gates_x, gates_xp);
  KernelConstants k = KernelConstants::from(arch);
  k.sigma_fc *= sigma_scale;
  NtkTarget t;
  t.unnormalized = e.total;
  for (const auto& term : e.terms) t.value += k.beta_res(term.included, arch.block_depth) * term.npk;
  t.constant = t.unnormalized != 0.0 ? t.value / t.unnormalized : 0.0;
  return t;
}

inline NtkTarget ntk_target_conv(const ArchSpec& arch, std::span<const double> x_v, std::span<const double> xp_v,
                                 std::span<const double> x_f, std::span<const double> xp_f,
                                 const GateProvider& provider, double sigma_scale = 1.0) {
  ArchSpec scaled = arch;
  scaled.c_scale *= sigma_scale;
  NtkTarget t;
  t.unnormalized = npk_conv_rotsum(arch, x_v, xp_v, x_f, xp_f, provider);
  t.constant = KernelConstants::from(scaled).beta_cv / double(arch.d_in * arch.d_in);
  t.value = t.constant * t.unnormalized;
  return t;
}

}  // namespace dualview
