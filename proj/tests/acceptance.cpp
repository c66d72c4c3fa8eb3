// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dualview/io/config.hpp"
#include "dualview/kernels/npk.hpp"
#include "dualview/kernels/ntk.hpp"
#include "dualview/lab/experiments.hpp"
#include "dualview/lab/verify.hpp"
#include "oracles.hpp"

using namespace dualview;

namespace {

constexpr std::uint64_t kSeed = 2024;
constexpr std::uint64_t kBudget = 100'000;

// Lowest mean test accuracy on circles (noise 0.15, 5 seeds, 30 epochs) that
// every regime must reach. Pilot DNN runs at these settings land at 0.91 to 0.97.
constexpr double kLearnabilityThreshold = 0.90;

struct Outcome {
  bool passed = true;
  std::string detail;

  void need(bool ok, const std::string& what) {
    passed = passed && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
  void take(const std::vector<CheckResult>& checks) {
    for (const auto& c : checks)
      need(c.passed && !c.skipped, c.name + " dev=" + detail::fmt(c.deviation) + " tol=" + detail::fmt(c.tolerance) +
                                       (c.detail.empty() ? "" : " (" + c.detail + ")"));
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ParamSet gaussian(const ArchSpec& arch, Rng& rng) {
  const NetPlan plan = build_plan(arch);
  return init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
}

Outcome path_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const auto checks = check_path_identities(60, kBudget, kSeed);
  o.take({checks[0]});
  // Independent FC reference: textbook MLP against a hand-rolled path sum.
  Rng rng(kSeed, 1);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const ArchSpec arch = random_small_arch(Family::FC, rng);
    const auto W = oracle::fc_matrices(gaussian(arch, rng));
    const Vec x = random_input(arch.d_in, rng);
    const oracle::FcForward f = oracle::fc_relu(W, x);
    double sum = 0.0;
    oracle::each_fc_path(W, [&](const auto& nodes) {
      sum += oracle::fc_feature(x, f.gates, nodes) * oracle::fc_value(W, nodes);
    });
    worst = std::max(worst, std::abs(f.out[0] - sum) / (1 + std::abs(f.out[0])));
  }
  o.need(worst <= 1e-9, "fc-oracle dev=" + detail::fmt(worst));
  const double s = seconds_since(t0);
  o.need(s <= 60.0, "runtime " + detail::fmt(s) + "s");
  return o;
}

Outcome overlap_kernel() {
  Outcome o;
  o.take({check_path_identities(60, kBudget, kSeed)[1]});
  Rng rng(kSeed, 2);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const ArchSpec arch = random_small_arch(Family::FC, rng);
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = gaussian(arch, rng);
    const Vec x = random_input(arch.d_in, rng), xp = perturb(x, 0.3, rng);
    const GateTensor gx = forward_relu(plan, pf, x).gates, gxp = forward_relu(plan, pf, xp).gates;
    const double ref = oracle::fc_npk(oracle::fc_matrices(pf), x, xp, gx.layers, gxp.layers);
    double k = 0.0;
    const auto counts = overlap_counts(arch, gx, gxp);
    for (std::size_t i = 0; i < x.size(); ++i) k += x[i] * xp[i] * counts[i];
    worst = std::max(worst, std::abs(k - ref) / (1 + std::abs(ref)));
  }
  o.need(worst <= 1e-9, "fc-oracle dev=" + detail::fmt(worst));
  return o;
}

Outcome product_structure() {
  Outcome o;
  o.take(check_product_structure(100, kBudget, kSeed));
  return o;
}

Outcome mc_fc() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  o.take(check_mc_fc(mc_fc_sweep({16, 64, 256}, {2, 3}, 40, 200, 1.0, kSeed)));
  // The closed-form target is the exact expectation (finite sum over pairs).
  Rng rng(kSeed, 4);
  double worst = 0.0;
  for (std::size_t d : {2, 3}) {
    const ArchSpec arch = make_fc(4, d, 8);
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = gaussian(arch, rng);
    const Vec x = random_input(4, rng), xp = perturb(x, 0.3, rng);
    const GateTensor gx = forward_relu(plan, pf, x).gates, gxp = forward_relu(plan, pf, xp).gates;
    const double exact = oracle::expected_value_ntk(arch, layer_sigmas(arch, plan), x, xp, gx, gxp);
    worst = std::max(worst, std::abs(ntk_target_fc(arch, x, xp, gx, gxp).value - exact) / (1 + std::abs(exact)));
  }
  o.need(worst <= 1e-9, "exact-expectation dev=" + detail::fmt(worst));
  const double s = seconds_since(t0);
  o.need(s <= 600.0, "runtime " + detail::fmt(s) + "s");
  return o;
}

template <typename Target>
double exact_target_dev(Family fam, std::size_t cases, std::uint64_t stream, Target&& target) {
  Rng rng(kSeed, stream);
  double worst = 0.0;
  for (std::size_t t = 0; t < cases; ++t) {
    const ArchSpec arch = random_small_arch(fam, rng, 5'000);
    const NetPlan plan = build_plan(arch);
    const ParamSet pf = gaussian(arch, rng);
    const GateProvider prov = make_gate_provider(arch, pf, FeatureKind::Relu);
    const Vec x = random_input(arch.d_in, rng), xp = perturb(x, 0.3, rng);
    const GateTensor gx = prov(x), gxp = prov(xp);
    const double exact = oracle::expected_value_ntk(arch, layer_sigmas(arch, plan), x, xp, gx, gxp);
    worst = std::max(worst, std::abs(target(arch, prov, x, xp, gx, gxp) - exact) / (1 + std::abs(exact)));
  }
  return worst;
}

Outcome conv() {
  Outcome o;
  o.take(check_conv(6, 200, true, 1.0, kBudget, kSeed));
  const double dev = exact_target_dev(Family::CONV_GAP, 8, 5,
                                      [](const ArchSpec& a, const GateProvider& p, const Vec& x, const Vec& xp,
                                         const GateTensor&, const GateTensor&) {
                                        return ntk_target_conv(a, x, xp, x, xp, p).value;
                                      });
  o.need(dev <= 1e-9, "exact-expectation dev=" + detail::fmt(dev));
  return o;
}

Outcome res() {
  Outcome o;
  o.take(check_res(6, 200, true, 1.0, kBudget, kSeed));
  const double dev = exact_target_dev(Family::RES, 8, 6,
                                      [](const ArchSpec& a, const GateProvider&, const Vec& x, const Vec& xp,
                                         const GateTensor& gx, const GateTensor& gxp) {
                                        return ntk_target_res(a, x, xp, gx, gxp).value;
                                      });
  o.need(dev <= 1e-9, "exact-expectation dev=" + detail::fmt(dev));
  return o;
}

Outcome gradients() {
  Outcome o;
  o.take(check_gradients(20, kSeed));
  return o;
}

Outcome training() {
  Outcome o;
  const ExperimentConfig cfg;
  const std::size_t seeds = 5;
  TrainConfig base = cfg.train;
  base.seed = kSeed;

  std::vector<RunSpec> jobs;
  TrainConfig dnn = base;
  dnn.regime = Regime::DNN;
  for (std::size_t s = 0; s < seeds; ++s) {
    dnn.seed = kSeed + s;
    jobs.push_back({"DNN", dnn});
  }
  for (auto& j : constant_one_jobs({Regime::DGN_STANDALONE, Regime::DLGN}, base, seeds)) jobs.push_back(j);
  for (auto& j : permutation_jobs(cfg.arch, base, seeds)) jobs.push_back(j);

  const auto records = run_sweep(jobs, cfg.arch, cfg.data.synthetic, cfg.data.test_fraction);
  std::map<std::string, double> mean;
  for (const auto& [label, stats] : summarize(records)) {
    mean[label] = stats.mean();
    std::printf("  %-24s mean_test_accuracy=%.4f stderr=%.4f\n", label.c_str(), stats.mean(),
                stats.stderr_of_mean());
  }

  for (const char* r : {"DGN_STANDALONE", "DLGN"}) {
    const double gap = std::abs(mean.at(std::string(r) + "(x,1)") - mean.at(std::string(r) + "(x,x)"));
    o.need(gap <= 0.02, std::string(r) + " (x,1)-(x,x) gap=" + detail::fmt(gap));
  }
  const std::string identity_label =
      "DLGN perm=" + permutation_label(admissible_permutations(build_plan(cfg.arch)).front());
  const double identity = mean.at(identity_label);
  double worst_perm = 0.0;
  for (const auto& [label, m] : mean)
    if (label.rfind("DLGN perm=", 0) == 0) worst_perm = std::max(worst_perm, std::abs(m - identity));
  o.need(worst_perm <= 0.02, "permutation gap=" + detail::fmt(worst_perm));
  double lowest = 1.0;
  for (const auto& [label, m] : mean) lowest = std::min(lowest, m);
  o.need(lowest >= kLearnabilityThreshold, "lowest mean=" + detail::fmt(lowest) + " threshold=" +
                                               detail::fmt(kLearnabilityThreshold) +
                                               " pilot DNN=" + detail::fmt(mean.at("DNN")));
  return o;
}

Outcome self_gating() {
  Outcome o;
  o.take({check_self_gating(1000, kSeed)});
  return o;
}

Outcome gram_psd() {
  Outcome o;
  o.take(check_gram_psd(64, kSeed));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"path identity y = <phi, v>", path_identity},
      {"NPK as overlap-weighted inner product", overlap_kernel},
      {"hard-gate overlap product structure", product_structure},
      {"FC Monte Carlo NTK vs scaled NPK", mc_fc},
      {"CONV_GAP rotation-sum kernel", conv},
      {"RES ensemble kernel", res},
      {"gradient suite", gradients},
      {"desk-scale training analogues", training},
      {"self-gating equivalence", self_gating},
      {"Gram PSD", gram_psd},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.need(false, std::string("exception: ") + e.what());
    }
    failures += !o.passed;
    std::printf("%s criterion %zu: %s [%.1fs] %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first,
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures ? 1 : 0;
}
