#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/models.hpp"
#include "dualview/kernels/npk.hpp"
#include "dualview/paths/paths.hpp"

namespace dualview {

/// One measured check: deviation against tolerance.
struct CheckResult {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string detail;

  static CheckResult measure(std::string name, double deviation, double tolerance, std::string detail = {}) {
    CheckResult c;
    c.name = std::move(name);
    c.deviation = deviation;
    c.tolerance = tolerance;
    c.passed = std::isfinite(deviation) && deviation <= tolerance;
    c.detail = std::move(detail);
    return c;
  }

  static CheckResult skip(std::string name, std::string reason) {
    CheckResult c;
    c.name = std::move(name);
    c.skipped = true;
    c.passed = true;
    c.detail = std::move(reason);
    return c;
  }
};

struct InvarianceReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

inline double scaled_diff(double a, double b) { return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))); }

/// Hard gates of a feature network for any input; the gate provider used by
/// the rotation-sum kernel.
inline GateProvider make_gate_provider(const ArchSpec& arch, ParamSet params_f, FeatureKind kind) {
  auto value_plan = std::make_shared<NetPlan>(build_plan(arch));
  auto feature_plan = std::make_shared<NetPlan>(kind == FeatureKind::Shallow ? build_shallow_plan(arch) : *value_plan);
  auto params = std::make_shared<ParamSet>(std::move(params_f));
  const double beta = arch.beta;
  return [=](std::span<const double> x) {
    return feature_gates(*value_plan, *feature_plan, *params, x, kind, GateMode::Hard, beta).first;
  };
}

/// (a) The FC product kernel is unchanged by every permutation of the gate
/// layers: each routed kernel is compared with the identity one.
inline CheckResult check_layer_permutation(const ArchSpec& arch, std::span<const double> x, std::span<const double> xp,
                                           const GateTensor& gates_x, const GateTensor& gates_xp) {
  const NetPlan plan = build_plan(arch);
  const double base = npk_fc(x, xp, gates_x, gates_xp);
  double worst = 0.0;
  std::size_t count = 0;
  for (const auto& perm : admissible_permutations(plan)) {
    GateRouting r;
    r.perm = perm;
    const double k = npk_fc(x, xp, r.apply(gates_x), r.apply(gates_xp));
    worst = std::max(worst, std::abs(k - base) / std::max(1.0, std::abs(base)));
    ++count;
  }
  return CheckResult::measure("layer-permutation", worst, 1e-12, std::to_string(count) + " permutations");
}

/// (b) NPK^CONV(rot(x, s), rot(x', s)) == NPK^CONV(x, x') for every shift s.
inline CheckResult check_rotation(const ArchSpec& arch, std::span<const double> x, std::span<const double> xp,
                                  const GateProvider& provider) {
  const double base = npk_conv_rotsum(arch, x, xp, provider);
  double worst = 0.0;
  for (std::size_t s = 1; s < arch.d_in; ++s)
    worst = std::max(worst, scaled_diff(npk_conv_rotsum(arch, rot(x, s), rot(xp, s), provider), base));
  return CheckResult::measure("rotation-invariance", worst, 1e-9, std::to_string(arch.d_in - 1) + " shifts");
}

/// (c) With constant-1 value input the FC kernel is d_in * prod <G_l, G_l'>,
/// gates still taken from the real inputs; compared against the closed form
/// and, within budget, against brute-force path features.
inline CheckResult check_constant_one(const ArchSpec& arch, const GateTensor& gates_x, const GateTensor& gates_xp,
                                      std::uint64_t budget = kDefaultPathBudget) {
  const Vec one(arch.d_in, 1.0);
  const double closed = npk_fc(one, one, gates_x, gates_xp);
  double product = double(arch.d_in);
  for (std::size_t l = 0; l < gates_x.size(); ++l) product *= dot(gates_x[l], gates_xp[l]);
  double dev = scaled_diff(closed, product);
  std::string note = "closed form vs d_in * gate product";
  if (arch.path_count() <= budget) {
    const double brute = dot(path_features(arch, one, gates_x, budget), path_features(arch, one, gates_xp, budget));
    dev = std::max(dev, scaled_diff(brute, product));
    note += " and brute-force paths";
  }
  return CheckResult::measure("constant-one", dev, 1e-9, note);
}

/// (d) Ensemble structure of RES: the total equals the sum of per-sub-FCN
/// FC kernels; dropping the sub-FCNs through any one block leaves the other
/// terms unchanged; within budget, the total equals brute-force <phi, phi'>.
inline CheckResult check_ensemble(const ArchSpec& arch, std::span<const double> x, std::span<const double> xp,
                                  const GateTensor& gates_x, const GateTensor& gates_xp,
                                  std::uint64_t budget = kDefaultPathBudget) {
  const EnsembleNpk full = npk_res_ensemble(arch, x, xp, gates_x, gates_xp);
  double sum_fc = 0.0, dev = 0.0;
  for (const auto& sub : enumerate_subfcns(arch))
    sum_fc += npk_fc(x, xp, restrict_gates(gates_x, sub), restrict_gates(gates_xp, sub));
  dev = scaled_diff(full.total, sum_fc);
  for (std::size_t j = 0; j < arch.skips; ++j) {
    const EnsembleNpk cut = npk_res_ensemble(arch, x, xp, gates_x, gates_xp, 1u << j);
    for (const auto& t : cut.terms)
      for (const auto& f : full.terms)
        if (f.mask == t.mask) dev = std::max(dev, std::abs(f.npk - t.npk));
  }
  std::string note = "sum of sub-FCN kernels, block removal";
  if (arch.path_count() <= budget) {
    const double brute = dot(path_features(arch, x, gates_x, budget), path_features(arch, xp, gates_xp, budget));
    dev = std::max(dev, scaled_diff(full.total, brute));
    note += ", brute-force paths";
  }
  return CheckResult::measure("ensemble", dev, 1e-9, note);
}

/// Runs the checks that apply to the family on consecutive probe pairs.
/// Gates are hard gates of the feature network (params_f, kind).
inline InvarianceReport invariance_report(const ArchSpec& arch, const ParamSet& params_f,
                                          const std::vector<Vec>& probes, FeatureKind kind = FeatureKind::Relu,
                                          std::uint64_t budget = kDefaultPathBudget) {
  detail::require(probes.size() >= 2, "invariance_report: need at least two probes");
  const GateProvider provider = make_gate_provider(arch, params_f, kind);
  InvarianceReport report;
  auto worst_of = [](std::vector<CheckResult> rs) {
    CheckResult w = rs.front();
    for (const auto& r : rs)
      if (r.deviation > w.deviation || !r.passed) w = r;
    return w;
  };
  std::vector<CheckResult> perm, rotation, one, ensemble;
  for (std::size_t i = 0; i + 1 < probes.size(); ++i) {
    const Vec& x = probes[i];
    const Vec& xp = probes[i + 1];
    const GateTensor gx = provider(x), gxp = provider(xp);
    switch (arch.family) {
      case Family::FC:
        perm.push_back(check_layer_permutation(arch, x, xp, gx, gxp));
        one.push_back(check_constant_one(arch, gx, gxp, budget));
        break;
      case Family::CONV_GAP: rotation.push_back(check_rotation(arch, x, xp, provider)); break;
      case Family::RES: ensemble.push_back(check_ensemble(arch, x, xp, gx, gxp, budget)); break;
    }
  }
  for (auto* group : {&perm, &rotation, &one, &ensemble})
    if (!group->empty()) report.checks.push_back(worst_of(*group));
  return report;
}

}  // namespace dualview
