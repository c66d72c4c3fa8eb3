#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dualview/arch/models.hpp"
#include "dualview/lab/verify.hpp"
#include "dualview/paths/paths.hpp"
#include "oracles.hpp"

using namespace dualview;

namespace {

GateTensor all_on(const NetPlan& plan) {
  GateTensor g;
  for (auto s : plan.gate_sizes) g.layers.emplace_back(s, 1.0);
  if (plan.pool_gate) {
    g.pool_layer = plan.pool_gate;
    g.layers[*plan.pool_gate] = pool_mask(plan);
  }
  return g;
}

}  // namespace

TEST(PathCount, FamilyFormulas) {
  EXPECT_EQ(make_fc(3, 3, 4).path_count(), 48u);
  const ArchSpec cv = make_conv(4, 1, 2, 2, 1);
  EXPECT_EQ(cv.path_count(), 16u);
  EXPECT_EQ(cv.bundle_count(), 4u);
  EXPECT_EQ(make_res(2, 1, 1, 2).path_count(), 12u);
}

TEST(PathCount, EnumerationMatchesFormula) {
  Rng rng(40);
  for (int t = 0; t < 30; ++t) {
    const ArchSpec arch = random_small_arch(detail::kFamilies[t % 3], rng, 20'000);
    const PathTable table = enumerate_paths(arch);
    EXPECT_EQ(table.size(), arch.path_count());
    if (arch.family == Family::CONV_GAP) EXPECT_EQ(table.bundles, arch.bundle_count());
  }
}

TEST(PathCount, BudgetRefusalReportsCount) {
  const ArchSpec big = make_fc(10, 5, 10);  // 10^5 paths
  try {
    enumerate_paths(big, 1000);
    FAIL() << "expected refusal";
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.paths(), 100000u);
    EXPECT_EQ(e.budget(), 1000u);
  }
  EXPECT_EQ(make_fc(1000, 20, 1000).path_count(), UINT64_MAX);  // saturates
}

TEST(PathOrder, FcIsLexicographic) {
  const PathTable t = enumerate_paths(make_fc(2, 3, 3));
  for (std::size_t i = 1; i < t.size(); ++i) {
    std::vector<std::uint32_t> a{t.paths[i - 1].input}, b{t.paths[i].input};
    a.insert(a.end(), t.paths[i - 1].nodes.begin(), t.paths[i - 1].nodes.end());
    b.insert(b.end(), t.paths[i].nodes.begin(), t.paths[i].nodes.end());
    EXPECT_LT(a, b);
  }
}

TEST(PathActivity, Examples) {
  const ArchSpec fc = make_fc(2, 3, 2);
  const NetPlan plan = build_plan(fc);
  GateTensor g = all_on(plan);
  const PathTable t = enumerate_paths(fc);
  for (const auto& p : t.paths) EXPECT_EQ(path_activity(g, p), 1.0);
  g.layers[1][0] = 0.0;
  for (const auto& p : t.paths) EXPECT_EQ(path_activity(g, p), p.nodes[1] == 0 ? 0.0 : 1.0);

  const ArchSpec cv = make_conv(4, 1, 2, 2, 1);
  const GateTensor gc = all_on(build_plan(cv));
  for (const auto& p : enumerate_paths(cv).paths) EXPECT_EQ(path_activity(gc, p), 0.25);
}

TEST(PathValue, Examples) {
  const ArchSpec fc = make_fc(2, 3, 2);
  const NetPlan plan = build_plan(fc);
  const PathTable t = enumerate_paths(fc);
  const ParamSet ones = ParamSet::filled(plan, 1.0);
  for (const auto& p : t.paths) EXPECT_EQ(path_value(ones, p), 1.0);

  const double s = 0.5;
  ParamSet signs = ParamSet::filled(plan, s);
  signs[0][0] = -s;  // weight input 0 -> hidden 0 of layer 1
  for (const auto& p : t.paths) {
    const bool through = p.input == 0 && p.nodes[0] == 0;
    EXPECT_EQ(path_value(signs, p), through ? -s * s * s : s * s * s);
  }
}

TEST(Bundles, PartitionIntoWeightSharingClasses) {
  Rng rng(41);
  for (int t = 0; t < 6; ++t) {
    const ArchSpec arch = random_small_arch(Family::CONV_GAP, rng, 20'000);
    const PathTable table = enumerate_paths(arch);
    const BundleTable b = bundle_table(table);
    EXPECT_EQ(b.size(), arch.path_count() / arch.d_in);
    std::vector<int> seen(table.size(), 0);
    const ParamSet p = init_params(build_plan(arch), layer_sigmas(arch, build_plan(arch)), rng);
    for (const auto& members : b.members) {
      ASSERT_EQ(members.size(), arch.d_in);
      std::set<std::uint32_t> inputs;
      for (auto m : members) {
        ++seen[m];
        inputs.insert(table.paths[m].input);
        EXPECT_EQ(table.paths[m].windows, table.paths[members[0]].windows);
        EXPECT_EQ(table.paths[m].nodes, table.paths[members[0]].nodes);
        EXPECT_EQ(table.paths[m].weights, table.paths[members[0]].weights);
        EXPECT_EQ(path_value(p, table.paths[m]), path_value(p, table.paths[members[0]]));
      }
      EXPECT_EQ(inputs.size(), arch.d_in);  // one member per input node
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(Bundles, CircularShiftRelation) {
  // With a single conv layer the unit at position f reads input f (+) k.
  const ArchSpec arch = make_conv(5, 1, 3, 2, 1);
  for (const auto& p : enumerate_paths(arch).paths)
    EXPECT_EQ(p.input, (p.positions[0] + p.windows[0]) % 5);
}

TEST(DualVectors, TwoTwoOneExample) {
  const ArchSpec arch = make_fc(2, 2, 2);
  const NetPlan plan = build_plan(arch);
  const ParamSet ones = ParamSet::filled(plan, 1.0);
  const Vec x{1.0, 1.0};
  const ForwardResult r = forward_relu(plan, ones, x);
  const DualVectors d = dual_vectors(arch, ones, x, r.gates);
  EXPECT_EQ(d.npf, (Vec{1, 1, 1, 1}));
  EXPECT_EQ(d.npv, (Vec{1, 1, 1, 1}));
  EXPECT_EQ(dot(d.npf, d.npv), r.y);

  const Vec neg{-1.0, -1.0};
  const DualVectors dn = dual_vectors(arch, ones, neg, forward_relu(plan, ones, neg).gates);
  for (double f : dn.npf) EXPECT_EQ(f, 0.0);
}

TEST(DualVectors, ConstantOneFeatureIsActivity) {
  Rng rng(42);
  const ArchSpec arch = make_fc(3, 3, 3);
  const NetPlan plan = build_plan(arch);
  const GateTensor g = random_hard_gates(plan, rng);
  const Vec one(3, 1.0);
  const Vec f = path_features(arch, one, g);
  const PathTable t = enumerate_paths(arch);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(f[i], path_activity(g, t.paths[i]));
}

TEST(DualVectors, MatchIndependentFcEnumeration) {
  Rng rng(43);
  const ArchSpec arch = make_fc(3, 4, 3);
  const NetPlan plan = build_plan(arch);
  const ParamSet p = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
  const Vec x = random_input(3, rng);
  const ForwardResult r = forward_relu(plan, p, x);
  const DualVectors d = dual_vectors(arch, p, x, r.gates);
  const auto W = oracle::fc_matrices(p);
  Vec npf, npv;
  oracle::each_fc_path(W, [&](const auto& nodes) {
    npf.push_back(oracle::fc_feature(x, r.gates.layers, nodes));
    npv.push_back(oracle::fc_value(W, nodes));
  });
  ASSERT_EQ(npf.size(), d.npf.size());
  for (std::size_t i = 0; i < npf.size(); ++i) {
    EXPECT_EQ(d.npf[i], npf[i]);
    EXPECT_NEAR(d.npv[i], npv[i], 1e-15);
  }
}

TEST(DualVectors, InnerProductEqualsForwardOutputAllFamilies) {
  Rng rng(44);
  double worst = 0.0;
  for (int t = 0; t < 60; ++t) {
    const ArchSpec arch = random_small_arch(detail::kFamilies[t % 3], rng);
    const NetPlan plan = build_plan(arch);
    const ParamSet p = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const Vec x = random_input(arch.d_in, rng);
    const ForwardResult r = forward_relu(plan, p, x);
    const DualVectors d = dual_vectors(arch, p, x, r.gates);
    worst = std::max(worst, std::abs(r.y - dot(d.npf, d.npv)) / (1 + std::abs(r.y)));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(DualVectors, HoldsForGatedNetworksToo) {
  Rng rng(45);
  for (int t = 0; t < 15; ++t) {
    const ArchSpec arch = random_small_arch(detail::kFamilies[t % 3], rng);
    const NetPlan plan = build_plan(arch);
    const ParamSet pv = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const GateTensor g = random_hard_gates(plan, rng);
    const Vec x = random_input(arch.d_in, rng);
    const double y = forward_gated(plan, pv, g, {}, x).y;
    const DualVectors d = dual_vectors(arch, pv, x, g);
    EXPECT_NEAR(y, dot(d.npf, d.npv), 1e-9 * (1 + std::abs(y)));
  }
}

TEST(Overlap, Examples) {
  const ArchSpec arch = make_fc(2, 2, 2);
  const NetPlan plan = build_plan(arch);
  const GateTensor on = all_on(plan);
  EXPECT_EQ(overlap(0, on, on, arch), 2u);
  EXPECT_EQ(overlap(1, on, on, arch), 2u);

  GateTensor half = on;
  half.layers[0] = {1.0, 0.0};
  EXPECT_EQ(overlap(0, half, on, arch), 1u);

  GateTensor other = on;
  other.layers[0] = {0.0, 1.0};
  EXPECT_EQ(overlap(0, half, other, arch), 0u);
}

TEST(Overlap, SoftGatesRefusedDiagnosticSeparate) {
  const ArchSpec arch = make_fc(2, 3, 2);
  const NetPlan plan = build_plan(arch);
  GateTensor soft = all_on(plan);
  soft.mode = GateMode::Soft;
  EXPECT_THROW(overlap_counts(arch, soft, soft), InvalidArgument);
  Rng rng(46);
  const GateTensor a = random_hard_gates(plan, rng), b = random_hard_gates(plan, rng);
  const Vec diag = soft_overlap_diagnostic(arch, a, b);
  const auto counts = overlap_counts(arch, a, b);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(diag[i], double(counts[i]));
}

TEST(Overlap, FcIdenticalAcrossInputNodes) {
  Rng rng(47);
  for (int t = 0; t < 20; ++t) {
    const ArchSpec arch = random_small_arch(Family::FC, rng);
    const NetPlan plan = build_plan(arch);
    const auto counts = overlap_counts(arch, random_hard_gates(plan, rng), random_hard_gates(plan, rng));
    for (auto c : counts) EXPECT_EQ(c, counts[0]);
  }
}

TEST(Overlap, NpfInnerProductIsOverlapWeightedInnerProduct) {
  Rng rng(48);
  for (int t = 0; t < 30; ++t) {
    const ArchSpec arch = random_small_arch(detail::kFamilies[t % 3], rng);
    const NetPlan plan = build_plan(arch);
    const GateTensor gx = random_hard_gates(plan, rng), gxp = random_hard_gates(plan, rng);
    const Vec x = random_input(arch.d_in, rng), xp = random_input(arch.d_in, rng);
    const double k = dot(path_features(arch, x, gx), path_features(arch, xp, gxp));
    const auto counts = overlap_counts(arch, gx, gxp);
    const double pool = arch.family == Family::CONV_GAP ? double(arch.d_in * arch.d_in) : 1.0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < arch.d_in; ++i) weighted += x[i] * xp[i] * double(counts[i]);
    EXPECT_NEAR(k, weighted / pool, 1e-9 * (1 + std::abs(k)));
  }
}

TEST(Overlap, ProductOfLayerCorrelationsExactly) {
  Rng rng(49);
  for (int t = 0; t < 100; ++t) {
    const ArchSpec arch = make_fc(1 + rng.below(3), 2 + rng.below(4), 1 + rng.below(4));
    const NetPlan plan = build_plan(arch);
    const GateTensor a = random_hard_gates(plan, rng), b = random_hard_gates(plan, rng);
    std::uint64_t product = 1;
    for (std::size_t l = 0; l < a.size(); ++l) {
      std::uint64_t c = 0;
      for (std::size_t j = 0; j < a[l].size(); ++j) c += a[l][j] == 1.0 && b[l][j] == 1.0;
      product *= c;
    }
    for (auto c : overlap_counts(arch, a, b)) EXPECT_EQ(c, product);
  }
}

TEST(SubFcn, EnumerationExamples) {
  EXPECT_EQ(enumerate_subfcns(make_res(2, 2, 1, 2)).size(), 4u);
  const auto subs = enumerate_subfcns(make_res(2, 1, 1, 2));
  ASSERT_EQ(subs.size(), 2u);
  EXPECT_EQ(subs[0].mask, 0u);
  EXPECT_EQ(subs[0].fc.depth, 2u);
  EXPECT_EQ(subs[1].fc.depth, 3u);
  EXPECT_EQ(subs[0].fc.path_count() + subs[1].fc.path_count(), 12u);
  EXPECT_THROW(enumerate_subfcns(make_fc(2, 2, 2)), InvalidArgument);
  for (const auto& s : enumerate_subfcns(make_res(3, 3, 2, 2))) EXPECT_EQ(s.fc.depth, (s.included() + 2) * 2);
}

TEST(SubFcn, ResDualVectorsAreConcatenationOfSubFcns) {
  Rng rng(50);
  for (int t = 0; t < 10; ++t) {
    const ArchSpec arch = make_res(2 + rng.below(2), 1 + rng.below(3), 1 + rng.below(2), 2 + rng.below(2));
    const NetPlan plan = build_plan(arch);
    const ParamSet p = init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
    const Vec x = random_input(arch.d_in, rng);
    const GateTensor g = forward_relu(plan, p, x).gates;
    const DualVectors full = dual_vectors(arch, p, x, g);
    Vec npf, npv;
    std::uint64_t total = 0;
    for (const auto& sub : enumerate_subfcns(arch)) {
      const DualVectors part = dual_vectors(sub.fc, restrict_params(p, sub), x, restrict_gates(g, sub));
      npf.insert(npf.end(), part.npf.begin(), part.npf.end());
      npv.insert(npv.end(), part.npv.begin(), part.npv.end());
      total += sub.fc.path_count();
    }
    EXPECT_EQ(total, arch.path_count());
    EXPECT_EQ(full.npf, npf);
    EXPECT_EQ(full.npv, npv);
  }
}
