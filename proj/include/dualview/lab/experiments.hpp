#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <string>
#include <vector>

#include "dualview/arch/plan.hpp"
#include "dualview/core/parallel.hpp"
#include "dualview/core/stats.hpp"
#include "dualview/data/dataset.hpp"
#include "dualview/train/train.hpp"

namespace dualview {

struct RunRecord {
  std::string label;
  Regime regime = Regime::DNN;
  bool constant_one_input = false;
  std::vector<std::size_t> permutation;
  std::uint64_t seed = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_clock_seconds = 0.0;
};

/// One training job of a sweep.
struct RunSpec {
  std::string label;
  TrainConfig config;
};

inline std::string permutation_label(const std::vector<std::size_t>& perm) {
  std::string s;
  for (auto p : perm) s += std::to_string(p);
  return s.empty() ? "identity" : s;
}

/// Trains every job on its own seed's synthetic data split; jobs run in
/// parallel with isolated state.
inline std::vector<RunRecord> run_sweep(const std::vector<RunSpec>& jobs, const ArchSpec& arch,
                                        const SyntheticSpec& data, double test_fraction) {
  std::vector<RunRecord> out(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const TrainConfig& c = jobs[i].config;
    const Dataset all = generate_synthetic(data, c.seed);
    const auto [tr, te] = train_test_split(all, test_fraction, c.seed);
    const TrainResult r = train(c, arch, tr, &te);
    out[i] = {jobs[i].label, c.regime, c.constant_one_input, c.permutation, c.seed,
              r.report.final_train_accuracy, r.report.final_test_accuracy, r.report.wall_clock_seconds};
  });
  return out;
}

/// Every admissible gate-layer permutation of `base.regime` x seeds.
inline std::vector<RunSpec> permutation_jobs(const ArchSpec& arch, const TrainConfig& base, std::size_t seeds) {
  std::vector<RunSpec> jobs;
  for (const auto& perm : admissible_permutations(build_plan(arch)))
    for (std::size_t s = 0; s < seeds; ++s) {
      TrainConfig c = base;
      c.permutation = perm;
      c.seed = base.seed + s;
      jobs.push_back({std::string(to_string(c.regime)) + " perm=" + permutation_label(perm), c});
    }
  return jobs;
}

/// (x, x) against (x, 1) for each regime x seeds.
inline std::vector<RunSpec> constant_one_jobs(const std::vector<Regime>& regimes, const TrainConfig& base,
                                              std::size_t seeds) {
  std::vector<RunSpec> jobs;
  for (Regime r : regimes)
    for (bool one : {false, true})
      for (std::size_t s = 0; s < seeds; ++s) {
        TrainConfig c = base;
        c.regime = r;
        c.permutation.clear();
        c.constant_one_input = one;
        c.seed = base.seed + s;
        jobs.push_back({std::string(to_string(r)) + (one ? "(x,1)" : "(x,x)"), c});
      }
  return jobs;
}

/// Mean test accuracy per label, in order of first appearance.
inline std::vector<std::pair<std::string, RunningStats>> summarize(const std::vector<RunRecord>& records) {
  std::vector<std::pair<std::string, RunningStats>> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == r.label; });
    if (it == out.end()) {
      out.push_back({r.label, {}});
      it = std::prev(out.end());
    }
    it->second.add(r.test_accuracy);
  }
  return out;
}

}  // namespace dualview
