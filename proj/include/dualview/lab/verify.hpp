#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/models.hpp"
#include "dualview/arch/params.hpp"
#include "dualview/arch/spec.hpp"
#include "dualview/core/finite_diff.hpp"
#include "dualview/core/rng.hpp"
#include "dualview/core/stats.hpp"
#include "dualview/kernels/gram.hpp"
#include "dualview/kernels/invariance.hpp"
#include "dualview/kernels/npk.hpp"
#include "dualview/kernels/ntk.hpp"
#include "dualview/paths/paths.hpp"
#include "dualview/train/train.hpp"

namespace dualview {

struct VerifyConfig {
  std::size_t identity_samples = 60;
  std::size_t gate_pairs = 100;
  std::size_t mc_samples = 200;
  std::size_t mc_trials = 40;
  std::vector<std::size_t> mc_widths{16, 64, 256};
  std::vector<std::size_t> mc_depths{2, 3};
  std::size_t conv_cases = 4;
  std::size_t res_cases = 3;
  std::size_t gradient_configs = 20;
  std::size_t selfgate_inputs = 1000;
  std::size_t gram_points = 64;
  std::uint64_t path_budget = 100'000;
  double sigma_scale = 1.0;  // multiplies sigma in every MC target; 1 except in mutation tests
  bool monte_carlo = true;

  bool operator==(const VerifyConfig&) const = default;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  void add(std::vector<CheckResult> more) {
    checks.insert(checks.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
};

// ---------------------------------------------------------------------------
// Random probes

inline Vec random_input(std::size_t d, Rng& rng) {
  Vec x(d);
  for (auto& v : x) v = rng.normal();
  return x;
}

/// x + noise * N(0, 1); nearby inputs keep deep gate overlaps nonzero.
inline Vec perturb(std::span<const double> x, double noise, Rng& rng) {
  Vec y(x.begin(), x.end());
  for (auto& v : y) v += noise * rng.normal();
  return y;
}

/// Small random architecture of the family with at most `budget` paths.
inline ArchSpec random_small_arch(Family family, Rng& rng, std::uint64_t budget = 100'000) {
  for (;;) {
    ArchSpec a;
    switch (family) {
      case Family::FC: a = make_fc(2 + rng.below(3), 2 + rng.below(3), 2 + rng.below(4)); break;
      case Family::CONV_GAP: {
        const std::size_t d = 3 + rng.below(6);
        a = make_conv(d, 1 + rng.below(2), 2 + rng.below(std::min<std::size_t>(2, d - 2)), 2 + rng.below(2),
                      1 + rng.below(2));
        break;
      }
      case Family::RES: a = make_res(2 + rng.below(2), 1 + rng.below(3), 1 + rng.below(2), 2 + rng.below(2)); break;
    }
    if (a.path_count() <= budget) return a;
  }
}

inline GateTensor random_hard_gates(const NetPlan& plan, Rng& rng) {
  GateTensor g;
  g.mode = GateMode::Hard;
  for (std::size_t l = 0; l < plan.gate_count(); ++l) {
    Vec layer(plan.gate_sizes[l]);
    for (auto& v : layer) v = rng.coin() ? 1.0 : 0.0;
    g.layers.push_back(std::move(layer));
  }
  if (plan.pool_gate) {
    g.pool_layer = plan.pool_gate;
    g.layers[*plan.pool_gate] = pool_mask(plan);
  }
  return g;
}

namespace detail {
inline constexpr Family kFamilies[] = {Family::FC, Family::CONV_GAP, Family::RES};

inline double rel_to(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(a)); }

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Path identities

/// y = <phi, v> for the ReLU network's own gates, and
/// <phi(x), phi(x')> = sum_i x_i x'_i overlap(i) / positions^2 on the same
/// sample set (positions = d_in under global average pooling, else 1).
inline std::vector<CheckResult> check_path_identities(std::size_t samples, std::uint64_t budget, std::uint64_t seed) {
  Rng rng(seed, 0x1d);
  double worst_y = 0.0, worst_k = 0.0;
  std::size_t done = 0, skipped = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Family fam = detail::kFamilies[s % 3];
    const ArchSpec arch = random_small_arch(fam, rng, 100'000);
    if (arch.path_count() > budget) {
      ++skipped;
      continue;
    }
    const NetPlan plan = build_plan(arch);
    const ParamSet params = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const Vec x = random_input(arch.d_in, rng);
    const Vec xp = perturb(x, 0.3, rng);
    const ForwardResult fx = forward_relu(plan, params, x);
    const ForwardResult fxp = forward_relu(plan, params, xp);
    const DualVectors dv = dual_vectors(arch, params, x, fx.gates, budget);
    worst_y = std::max(worst_y, std::abs(fx.y - dot(dv.npf, dv.npv)) / (1.0 + std::abs(fx.y)));

    const double k = dot(path_features(arch, x, fx.gates, budget), path_features(arch, xp, fxp.gates, budget));
    const auto counts = overlap_counts(arch, fx.gates, fxp.gates, budget);
    const double pos = fam == Family::CONV_GAP ? double(arch.d_in) : 1.0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < arch.d_in; ++i) weighted += x[i] * xp[i] * double(counts[i]);
    worst_k = std::max(worst_k, detail::rel_to(k, weighted / (pos * pos)));
    ++done;
  }
  const std::string note = std::to_string(done) + " samples, " + std::to_string(skipped) + " over budget";
  if (done == 0)
    return {CheckResult::skip("path-identity", "every sample exceeds the path budget"),
            CheckResult::skip("overlap-kernel", "every sample exceeds the path budget")};
  return {CheckResult::measure("path-identity", worst_y, 1e-9, note),
          CheckResult::measure("overlap-kernel", worst_k, 1e-9, note)};
}

/// overlap(i) = prod_l <G_l, G_l'> as integers on random hard gate pairs of
/// FC networks, and layer-permutation invariance of the product kernel.
inline std::vector<CheckResult> check_product_structure(std::size_t pairs, std::uint64_t budget, std::uint64_t seed) {
  Rng rng(seed, 0x3d);
  std::size_t mismatches = 0, done = 0;
  CheckResult perm_worst = CheckResult::measure("layer-permutation", 0.0, 1e-12);
  for (std::size_t s = 0; s < pairs; ++s) {
    ArchSpec arch = random_small_arch(Family::FC, rng, 100'000);
    arch.depth = 2 + rng.below(4);  // up to 4 gate layers
    if (arch.path_count() > budget) continue;
    const NetPlan plan = build_plan(arch);
    const GateTensor g = random_hard_gates(plan, rng), gp = random_hard_gates(plan, rng);
    std::uint64_t product = 1;
    for (std::size_t l = 0; l < g.size(); ++l) product *= static_cast<std::uint64_t>(dot(g[l], gp[l]));
    for (auto c : overlap_counts(arch, g, gp, budget)) mismatches += c != product;
    const Vec x = random_input(arch.d_in, rng), xp = random_input(arch.d_in, rng);
    CheckResult p = check_layer_permutation(arch, x, xp, g, gp);
    if (p.deviation > perm_worst.deviation || !p.passed) perm_worst = p;
    ++done;
  }
  if (done == 0)
    return {CheckResult::skip("overlap-product", "every sample exceeds the path budget"),
            CheckResult::skip("layer-permutation", "every sample exceeds the path budget")};
  return {CheckResult::measure("overlap-product", double(mismatches), 0.0,
                               std::to_string(done) + " gate pairs, integer mismatches counted"),
          perm_worst};
}

// ---------------------------------------------------------------------------
// Monte-Carlo NTK

struct McSweepRow {
  std::size_t width = 0;
  std::size_t depth = 0;
  std::size_t trials = 0;
  std::size_t within = 0;       // trials with |mean - target| <= 3 standard errors
  double median_rel_dev = 0.0;  // median over all single samples of |v - target| / |target|
  double stderr_rel = 0.0;      // mean over trials of standard_error / |target|
};

/// FC value-network NTK against d sigma^(2(d-1)) NPK. Gates come from a
/// random Gaussian ReLU feature network of the same shape and stay fixed.
inline std::vector<McSweepRow> mc_fc_sweep(const std::vector<std::size_t>& widths,
                                           const std::vector<std::size_t>& depths, std::size_t trials,
                                           std::size_t samples, double sigma_scale, std::uint64_t seed,
                                           std::size_t d_in = 4) {
  std::vector<McSweepRow> rows;
  for (auto d : depths)
    for (auto w : widths) {
      McSweepRow row;
      row.width = w;
      row.depth = d;
      row.trials = trials;
      std::vector<double> devs;
      const ArchSpec arch = make_fc(d_in, d, w);
      const NetPlan plan = build_plan(arch);
      for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(seed, (d << 40) ^ (w << 20) ^ t);
        const ParamSet pf = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
        const Vec x = random_input(d_in, rng), xp = perturb(x, 0.3, rng);
        const GateTensor gx = forward_relu(plan, pf, x).gates, gxp = forward_relu(plan, pf, xp).gates;
        const NtkTarget target = ntk_target_fc(arch, x, xp, gx, gxp, sigma_scale);
        const McEstimate est = ntk_expectation_mc(arch, gx, gxp, x, xp, samples, rng.next_u64());
        row.within += est.z_score(target.value) <= 3.0;
        if (target.value != 0.0) {
          for (double v : est.values) devs.push_back(std::abs(v - target.value) / std::abs(target.value));
          row.stderr_rel += est.standard_error / std::abs(target.value) / double(trials);
        }
      }
      row.median_rel_dev = devs.empty() ? 0.0 : median(devs);
      rows.push_back(row);
    }
  return rows;
}

inline std::vector<CheckResult> check_mc_fc(const std::vector<McSweepRow>& rows) {
  std::size_t within = 0, trials = 0;
  std::string detail;
  for (const auto& r : rows) {
    within += r.within;
    trials += r.trials;
  }
  // Coverage is asserted per (width, depth) cell at 95%.
  double worst_miss = 0.0;
  for (const auto& r : rows) worst_miss = std::max(worst_miss, double(r.trials - r.within) / double(r.trials));
  bool trend = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].depth == rows[i - 1].depth && !(rows[i].median_rel_dev < rows[i - 1].median_rel_dev)) trend = false;
  for (const auto& r : rows)
    detail += "w=" + std::to_string(r.width) + ",d=" + std::to_string(r.depth) + ": " + std::to_string(r.within) +
              "/" + std::to_string(r.trials) + " med=" + detail::fmt(r.median_rel_dev) + "; ";
  return {CheckResult::measure("mc-fc", worst_miss, 0.05,
                               std::to_string(within) + "/" + std::to_string(trials) + " trials within 3 SE; " + detail),
          CheckResult::measure("mc-fc-width-trend", trend ? 0.0 : 1.0, 0.0,
                               "median relative deviation strictly decreasing in width")};
}

// ---------------------------------------------------------------------------
// Convolution with global average pooling

inline std::vector<CheckResult> check_conv(std::size_t cases, std::size_t mc_samples, bool monte_carlo,
                                           double sigma_scale, std::uint64_t budget, std::uint64_t seed) {
  Rng rng(seed, 0xc0);
  double worst_bundle = 0.0, worst_rot = 0.0, worst_z = 0.0;
  std::size_t brute_done = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    const ArchSpec arch = random_small_arch(Family::CONV_GAP, rng, 100'000);
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const GateProvider provider = make_gate_provider(arch, pf, FeatureKind::Relu);
    const Vec x = random_input(arch.d_in, rng), xp = perturb(x, 0.3, rng);
    const double rotsum = npk_conv_rotsum(arch, x, xp, provider);
    if (arch.path_count() <= budget) {
      const ParamSet zero = ParamSet::zeros_like(plan);
      const double brute =
          dot(dual_vectors(arch, zero, x, provider(x), budget).npf, dual_vectors(arch, zero, xp, provider(xp), budget).npf);
      const double dd = double(arch.d_in * arch.d_in);
      worst_bundle = std::max(worst_bundle, scaled_diff(rotsum / dd, brute));
      ++brute_done;
    }
    worst_rot = std::max(worst_rot, check_rotation(arch, x, xp, provider).deviation);
    if (monte_carlo) {
      ArchSpec wide = make_conv(6, 2, 2, 8, 2);
      const NetPlan wplan = build_plan(wide);
      const ParamSet wpf = init_params(wplan, layer_sigmas(wide, wplan), rng, InitScheme::Gaussian);
      const GateProvider wprov = make_gate_provider(wide, wpf, FeatureKind::Relu);
      const Vec u = random_input(wide.d_in, rng), up = perturb(u, 0.3, rng);
      const NtkTarget t = ntk_target_conv(wide, u, up, u, up, wprov, sigma_scale);
      const McEstimate est = ntk_expectation_mc(wide, wprov(u), wprov(up), u, up, mc_samples, rng.next_u64());
      worst_z = std::max(worst_z, est.z_score(t.value));
    }
  }
  std::vector<CheckResult> out;
  const std::string n = std::to_string(cases) + " networks";
  out.push_back(brute_done ? CheckResult::measure("conv-rotsum-bundle", worst_bundle, 1e-9,
                                                  std::to_string(brute_done) + " networks brute-forced")
                           : CheckResult::skip("conv-rotsum-bundle", "every network exceeds the path budget"));
  out.push_back(CheckResult::measure("conv-rotation", worst_rot, 1e-9, n));
  if (monte_carlo) out.push_back(CheckResult::measure("mc-conv", worst_z, 3.0, "largest z over " + n));
  return out;
}

// ---------------------------------------------------------------------------
// Residual networks

inline std::vector<CheckResult> check_res(std::size_t cases, std::size_t mc_samples, bool monte_carlo,
                                          double sigma_scale, std::uint64_t budget, std::uint64_t seed) {
  Rng rng(seed, 0x7e5);
  double worst_ens = 0.0, worst_z = 0.0;
  bool brute_skipped = false;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t skips = 1 + c % 3;
    const ArchSpec arch = make_res(3, skips, 1 + rng.below(2), 2 + rng.below(2));
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const Vec x = random_input(arch.d_in, rng), xp = perturb(x, 0.3, rng);
    const GateTensor gx = forward_relu(plan, pf, x).gates, gxp = forward_relu(plan, pf, xp).gates;
    brute_skipped = brute_skipped || arch.path_count() > budget;
    worst_ens = std::max(worst_ens, check_ensemble(arch, x, xp, gx, gxp, budget).deviation);
    if (monte_carlo) {
      const ArchSpec wide = make_res(3, skips, 1, 16);
      const NetPlan wplan = build_plan(wide);
      const ParamSet wpf = init_params(wplan, layer_sigmas(wide, wplan), rng, InitScheme::Gaussian);
      const Vec u = random_input(wide.d_in, rng), up = perturb(u, 0.3, rng);
      const GateTensor gu = forward_relu(wplan, wpf, u).gates, gup = forward_relu(wplan, wpf, up).gates;
      const NtkTarget t = ntk_target_res(wide, u, up, gu, gup, sigma_scale);
      const McEstimate est = ntk_expectation_mc(wide, gu, gup, u, up, mc_samples, rng.next_u64());
      worst_z = std::max(worst_z, est.z_score(t.value));
    }
  }
  std::vector<CheckResult> out;
  out.push_back(CheckResult::measure("res-ensemble", worst_ens, 1e-9,
                                     std::to_string(cases) + " networks, b in 1..3" +
                                         (brute_skipped ? ", brute force skipped over budget" : "")));
  if (monte_carlo)
    out.push_back(CheckResult::measure("mc-res", worst_z, 3.0, "largest z over " + std::to_string(cases) + " networks"));
  return out;
}

// ---------------------------------------------------------------------------
// Gradients

/// Analytic vs central-difference gradients of the trainable parameters of
/// each regime on random networks (soft gates with beta = 10 outside the
/// fixed-gate regimes). Weights are Gaussian: symmetric +-sigma weights make
/// pre-activations cancel to rounding level, where ReLU has a kink. Networks
/// and inputs that put a hard pre-activation exactly at 0 are redrawn.
inline std::vector<CheckResult> check_gradients(std::size_t configs, std::uint64_t seed, double step = 1e-5) {
  std::vector<CheckResult> out;
  for (Regime regime : kAllRegimes) {
    Rng rng(seed, 0x9a0 + static_cast<std::uint64_t>(regime));
    double worst = 0.0;
    std::size_t redrawn = 0;
    for (std::size_t c = 0; c < configs;) {
      ArchSpec arch = random_small_arch(detail::kFamilies[c % 3], rng, 100'000);
      arch.heads = 1 + rng.below(3);
      TrainConfig tc;
      tc.regime = regime;
      tc.seed = rng.next_u64();
      tc.init = InitScheme::Gaussian;
      if (regime != Regime::DNN) {
        tc.constant_one_input = rng.coin();
        const auto perms = admissible_permutations(build_plan(arch));
        tc.permutation = perms[rng.below(perms.size())];
      }
      const Model model = make_model(tc, arch);
      const ParamSubset subset =
          regime == Regime::DNN || fixed_gates(regime) ? ParamSubset::Value : ParamSubset::All;
      const std::size_t head = rng.below(arch.heads);
      const Vec x = random_input(arch.d_in, rng);
      std::size_t kinks = 0;
      const GradVector a = grad(model, subset, x, head, &kinks);
      if (kinks > 0) {
        ++redrawn;
        continue;
      }
      const GradVector b = finite_diff_grad(model, subset, x, step, head);
      worst = std::max(worst, max_relative_error(a.values, b.values));
      ++c;
    }
    out.push_back(CheckResult::measure("gradients-" + std::string(to_string(regime)), worst, 1e-4,
                                       std::to_string(configs) + " random networks, " + std::to_string(redrawn) +
                                           " draws at kinks replaced"));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-gating and Gram matrices

/// A DGN whose feature and value networks share the DNN's weights, with hard
/// gates, reproduces the DNN's outputs exactly.
inline CheckResult check_self_gating(std::size_t inputs, std::uint64_t seed) {
  Rng rng(seed, 0x5e1f);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs; ++i) {
    ArchSpec arch = random_small_arch(detail::kFamilies[i % 3], rng, 100'000);
    arch.heads = 1 + rng.below(2);
    Model dnn = Model::create(arch, NetKind::DNN, GateMode::Hard, {}, rng, InitScheme::Gaussian);
    Model dgn = Model::create(arch, NetKind::DGN, GateMode::Hard, {}, rng, InitScheme::Gaussian);
    dgn.feature = dnn.value;
    dgn.value = dnn.value;
    const Vec x = random_input(arch.d_in, rng);
    const Vec a = dnn.logits(x), b = dgn.logits(x);
    for (std::size_t h = 0; h < a.size(); ++h) worst = std::max(worst, std::abs(a[h] - b[h]));
  }
  return CheckResult::measure("self-gating", worst, 0.0, std::to_string(inputs) + " inputs, exact equality");
}

inline CheckResult gram_check(const std::string& name, const GramMatrix& g) {
  const double min_eig = g.min_eigenvalue();
  // Deviation is how far the smallest eigenvalue falls below zero, relative
  // to the floor magnitude (passes when <= 1).
  const double floor_mag = std::max(1e-300, -g.psd_floor());
  return CheckResult::measure(name, std::max(0.0, -min_eig) / floor_mag, 1.0,
                              "n=" + std::to_string(g.n) + " min_eig=" + detail::fmt(min_eig) +
                                  " trace=" + detail::fmt(g.trace()) +
                                  (g.is_symmetric() ? "" : " (asymmetric)"));
}

inline std::vector<CheckResult> check_gram_psd(std::size_t points, std::uint64_t seed) {
  Rng rng(seed, 0x6a);
  std::vector<CheckResult> out;
  // Clustered points so that deep gate overlaps are not all zero.
  auto make_points = [&](std::size_t d) {
    std::vector<Vec> centres{random_input(d, rng), random_input(d, rng), random_input(d, rng)};
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < points; ++i) pts.push_back(perturb(centres[i % 3], 0.3, rng));
    return pts;
  };
  {
    const ArchSpec arch = make_fc(4, 3, 16);
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const GateProvider prov = make_gate_provider(arch, pf, FeatureKind::Relu);
    out.push_back(gram_check("gram-npk-fc", gram(make_points(4), [&](auto x, auto y) {
                               return npk_fc(x, y, prov(x), prov(y));
                             }, KernelTag::NpkDirect)));
  }
  {
    const ArchSpec arch = make_conv(6, 2, 2, 4, 2);
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const GateProvider prov = make_gate_provider(arch, pf, FeatureKind::Relu);
    out.push_back(gram_check("gram-npk-conv", gram(make_points(6), [&](auto x, auto y) {
                               return npk_conv_rotsum(arch, x, y, prov);
                             }, KernelTag::NpkDirect)));
  }
  {
    const ArchSpec arch = make_res(4, 2, 1, 8);
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const GateProvider prov = make_gate_provider(arch, pf, FeatureKind::Relu);
    out.push_back(gram_check("gram-npk-res", gram(make_points(4), [&](auto x, auto y) {
                               return npk_res_ensemble(arch, x, y, prov(x), prov(y)).total;
                             }, KernelTag::NpkDirect)));
  }
  {
    Model m = Model::create(make_fc(4, 3, 16), NetKind::DNN, GateMode::Hard, {}, rng, InitScheme::Gaussian);
    const std::vector<Vec> pts = make_points(4);
    std::vector<GradVector> grads;
    for (const auto& p : pts) grads.push_back(grad(m, ParamSubset::Value, p));
    std::vector<Vec> idx;
    for (std::size_t i = 0; i < pts.size(); ++i) idx.push_back({double(i)});
    out.push_back(gram_check("gram-ntk", gram(idx, [&](auto a, auto b) {
                               return dot(grads[std::size_t(a[0])], grads[std::size_t(b[0])]);
                             }, KernelTag::Ntk)));
  }
  return out;
}

/// The full invariant suite at the configured sizes.
inline VerifyReport run_verify(const VerifyConfig& cfg, std::uint64_t seed) {
  VerifyReport r;
  r.add(check_path_identities(cfg.identity_samples, cfg.path_budget, seed));
  r.add(check_product_structure(cfg.gate_pairs, cfg.path_budget, seed));
  if (cfg.monte_carlo)
    r.add(check_mc_fc(mc_fc_sweep(cfg.mc_widths, cfg.mc_depths, cfg.mc_trials, cfg.mc_samples, cfg.sigma_scale, seed)));
  r.add(check_conv(cfg.conv_cases, cfg.mc_samples, cfg.monte_carlo, cfg.sigma_scale, cfg.path_budget, seed));
  r.add(check_res(cfg.res_cases, cfg.mc_samples, cfg.monte_carlo, cfg.sigma_scale, cfg.path_budget, seed));
  r.add(check_gradients(cfg.gradient_configs, seed));
  r.checks.push_back(check_self_gating(cfg.selfgate_inputs, seed));
  r.add(check_gram_psd(cfg.gram_points, seed));
  return r;
}

}  // namespace dualview
