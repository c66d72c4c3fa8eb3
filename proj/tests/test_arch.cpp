#include <gtest/gtest.h>

#include <cmath>

#include "dualview/arch/models.hpp"
#include "dualview/kernels/npk.hpp"
#include "dualview/lab/verify.hpp"
#include "oracles.hpp"

using namespace dualview;

namespace {

GateTensor all_gates(const NetPlan& plan, double v) {
  GateTensor g;
  g.mode = GateMode::Hard;
  for (auto s : plan.gate_sizes) g.layers.emplace_back(s, v);
  if (plan.pool_gate) {
    g.pool_layer = plan.pool_gate;
    g.layers[*plan.pool_gate] = pool_mask(plan);
  }
  return g;
}

ParamSet random_params(const ArchSpec& arch, Rng& rng) {
  const NetPlan plan = build_plan(arch);
  return init_params(plan, layer_sigmas(arch, plan), rng, InitScheme::Gaussian);
}

}  // namespace

TEST(ArchSpec, Validation) {
  EXPECT_NO_THROW(make_fc(3, 3, 4).validate());
  EXPECT_THROW(make_fc(0, 3, 4).validate(), InvalidArgument);
  EXPECT_THROW(make_fc(3, 3, 0).validate(), InvalidArgument);
  EXPECT_THROW(make_conv(4, 1, 4, 2, 1).validate(), InvalidArgument);  // window must be < d_in
  EXPECT_NO_THROW(make_conv(4, 1, 3, 2, 1).validate());
  ArchSpec bad = make_fc(2, 2, 2, -1.0);
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(ArchSpec, PlanShapes) {
  const NetPlan fc = build_plan(make_fc(3, 3, 4));
  ASSERT_EQ(fc.param_shapes.size(), 3u);
  EXPECT_EQ(fc.param_shapes[0], (std::vector<std::size_t>{4, 3}));
  EXPECT_EQ(fc.param_shapes[2], (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(fc.gate_count(), 2u);

  const NetPlan cv = build_plan(make_conv(5, 2, 2, 3, 2));
  EXPECT_EQ(cv.param_shapes[0], (std::vector<std::size_t>{2, 1, 3}));
  EXPECT_EQ(cv.param_shapes[1], (std::vector<std::size_t>{2, 3, 3}));
  ASSERT_TRUE(cv.pool_gate.has_value());
  EXPECT_EQ(cv.gate_sizes[*cv.pool_gate], 15u);

  const NetPlan res = build_plan(make_res(2, 2, 2, 3));
  EXPECT_EQ(res.param_shapes.size(), 8u);  // (b + 2) blocks of d_blk layers
}

TEST(GateFn, HardAndSoftValues) {
  EXPECT_EQ(gate_fn(0.0, GateMode::Soft, 10.0), 0.5);
  EXPECT_NEAR(gate_fn(1.0, GateMode::Soft, 10.0), 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
  EXPECT_NEAR(gate_fn(1.0, GateMode::Soft, 10.0), 0.9999546, 1e-7);
  EXPECT_EQ(gate_fn(0.0, GateMode::Hard, 10.0), 0.0);
  EXPECT_EQ(gate_fn(1e-300, GateMode::Hard, 10.0), 1.0);
  EXPECT_GT(gate_fn(-800.0, GateMode::Soft, 10.0), -1.0);  // no overflow on the negative side
}

TEST(ForwardRelu, HandEvaluatedTwoLayerNet) {
  const ArchSpec arch = make_fc(2, 2, 2);
  const NetPlan plan = build_plan(arch);
  const ParamSet ones = ParamSet::filled(plan, 1.0);
  const Vec x{1.0, 1.0};
  const ForwardResult r = forward_relu(plan, ones, x);
  EXPECT_EQ(r.y, 4.0);
  EXPECT_EQ(r.gates[0], (Vec{1.0, 1.0}));

  const Vec neg{-1.0, -1.0};
  const ForwardResult n = forward_relu(plan, ones, neg);
  EXPECT_EQ(n.y, 0.0);
  EXPECT_EQ(n.gates[0], (Vec{0.0, 0.0}));
}

TEST(ForwardRelu, DimensionMismatch) {
  const NetPlan plan = build_plan(make_fc(3, 2, 2));
  const ParamSet p = ParamSet::filled(plan, 1.0);
  const Vec x{1.0, 2.0};
  EXPECT_THROW(forward_relu(plan, p, x), InvalidArgument);
}

TEST(ForwardRelu, MatchesNaiveMlp) {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    ArchSpec arch = make_fc(2 + rng.below(4), 1 + rng.below(4), 1 + rng.below(5));
    arch.heads = 1 + rng.below(3);
    const NetPlan plan = build_plan(arch);
    const ParamSet p = random_params(arch, rng);
    const Vec x = random_input(arch.d_in, rng);
    const auto ref = oracle::fc_relu(oracle::fc_matrices(p), x);
    const ForwardResult r = forward_relu(plan, p, x);
    ASSERT_EQ(r.logits.size(), ref.out.size());
    for (std::size_t h = 0; h < ref.out.size(); ++h) EXPECT_NEAR(r.logits[h], ref.out[h], 1e-12);
    for (std::size_t l = 0; l < ref.gates.size(); ++l) EXPECT_EQ(r.gates[l], ref.gates[l]);
  }
}

TEST(ForwardRelu, ConvMatchesNaiveCircularConvolution) {
  Rng rng(22);
  for (int t = 0; t < 10; ++t) {
    const ArchSpec arch = make_conv(4 + rng.below(4), 1 + rng.below(2), 2, 2 + rng.below(2), 1 + rng.below(2));
    const NetPlan plan = build_plan(arch);
    const ParamSet p = random_params(arch, rng);
    std::vector<ParamTensor> conv(p.tensors.begin(), p.tensors.begin() + std::ptrdiff_t(arch.conv_layers));
    ParamSet dense;
    dense.tensors.assign(p.tensors.begin() + std::ptrdiff_t(arch.conv_layers), p.tensors.end());
    const Vec x = random_input(arch.d_in, rng);
    EXPECT_NEAR(forward_relu(plan, p, x).y,
                oracle::conv_gap_relu(conv, oracle::fc_matrices(dense), arch.conv_window, x), 1e-12);
  }
}

TEST(ForwardRelu, ConvOutputIsRotationInvariant) {
  const ArchSpec arch = make_conv(6, 2, 2, 3, 2);
  const NetPlan plan = build_plan(arch);
  const ParamSet ones = ParamSet::filled(plan, 1.0);
  const Vec one(6, 1.0);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(forward_relu(plan, ones, rot(one, r)).y, forward_relu(plan, ones, one).y);

  Rng rng(23);
  const ParamSet p = random_params(arch, rng);
  const Vec x = random_input(6, rng);
  const ForwardResult base = forward_relu(plan, p, x);
  for (std::size_t r = 1; r < 6; ++r) {
    const ForwardResult rr = forward_relu(plan, p, rot(x, r));
    EXPECT_NEAR(rr.y, base.y, 1e-9 * (1 + std::abs(base.y)));
    // Hidden maps are shifted copies: z(rot(x, r))(c, f) = z(x)(c, f (+) r).
    const Vec& z0 = base.trace.slots[2];
    const Vec& zr = rr.trace.slots[2];
    for (std::size_t c = 0; c < arch.width; ++c)
      for (std::size_t f = 0; f < 6; ++f) EXPECT_NEAR(zr[c * 6 + f], z0[c * 6 + (f + r) % 6], 1e-12);
  }
}

TEST(ForwardRelu, GateRangesAndPoolMask) {
  Rng rng(24);
  for (Family fam : {Family::FC, Family::CONV_GAP, Family::RES}) {
    const ArchSpec arch = random_small_arch(fam, rng);
    const NetPlan plan = build_plan(arch);
    const ForwardResult r = forward_relu(plan, random_params(arch, rng), random_input(arch.d_in, rng));
    EXPECT_TRUE(r.gates.valid(fam == Family::CONV_GAP ? arch.d_in : 0));
    if (fam == Family::CONV_GAP)
      for (double g : r.gates[*plan.pool_gate]) EXPECT_EQ(g, 1.0 / double(arch.d_in));
  }
}

TEST(ForwardGated, UnitGatesGiveTheLinearNetwork) {
  Rng rng(25);
  const ArchSpec arch = make_fc(3, 3, 4);
  const NetPlan plan = build_plan(arch);
  const ParamSet p = random_params(arch, rng);
  const Vec x = random_input(3, rng);
  const auto W = oracle::fc_matrices(p);
  Vec h = x;
  for (const auto& m : W) {
    Vec next(m.size(), 0.0);
    for (std::size_t o = 0; o < m.size(); ++o)
      for (std::size_t i = 0; i < h.size(); ++i) next[o] += m[o][i] * h[i];
    h = next;
  }
  EXPECT_NEAR(forward_gated(plan, p, all_gates(plan, 1.0), {}, x).y, h[0], 1e-12);
  EXPECT_EQ(forward_gated(plan, p, all_gates(plan, 0.0), {}, x).y, 0.0);
}

TEST(ForwardGated, ConstantOneInputIsActivityWeightedValueSum) {
  Rng rng(26);
  const ArchSpec arch = make_fc(3, 3, 3);
  const NetPlan plan = build_plan(arch);
  const ParamSet p = random_params(arch, rng);
  const GateTensor g = random_hard_gates(plan, rng);
  const auto W = oracle::fc_matrices(p);
  double expect = 0.0;
  const Vec one(3, 1.0);
  oracle::each_fc_path(W, [&](const auto& nodes) { expect += oracle::fc_feature(one, g.layers, nodes) * oracle::fc_value(W, nodes); });
  GateRouting routing;
  routing.constant_one_input = true;
  const Vec x = random_input(3, rng);
  EXPECT_NEAR(forward_gated(plan, p, g, routing, x).y, expect, 1e-12);
}

TEST(ForwardGated, RoutingValidation) {
  const NetPlan plan = build_plan(make_res(2, 1, 1, 3));
  GateRouting bad;
  bad.perm = {0, 0, 2};
  EXPECT_THROW(bad.validate(plan), InvalidArgument);

  ArchSpec uneven = make_fc(2, 3, 3);
  const NetPlan fc = build_plan(uneven);
  GateRouting swap;
  swap.perm = {1, 0};
  EXPECT_NO_THROW(swap.validate(fc));
  GateRouting too_long;
  too_long.perm = {0, 1, 2};
  EXPECT_THROW(too_long.validate(fc), InvalidArgument);

  const NetPlan cv = build_plan(make_conv(4, 1, 2, 2, 2));
  GateRouting pool_swap;
  pool_swap.perm = {1, 0, 2};
  EXPECT_THROW(pool_swap.validate(cv), InvalidArgument);
}

TEST(ForwardGated, UnequalShapesRefused) {
  // Conv gate layer (w * d_in) and dense gate layer (w) differ in shape.
  const NetPlan cv = build_plan(make_conv(4, 1, 2, 2, 3));
  GateRouting r;
  r.perm = {2, 1, 0, 3};
  EXPECT_THROW(r.validate(cv), InvalidArgument);
  EXPECT_EQ(admissible_permutations(cv).size(), 2u);
}

TEST(ForwardDgn, SelfGatingEqualsRelu) {
  Rng rng(27);
  for (Family fam : {Family::FC, Family::CONV_GAP, Family::RES}) {
    const ArchSpec arch = random_small_arch(fam, rng);
    const NetPlan plan = build_plan(arch);
    const ParamSet p = random_params(arch, rng);
    const Vec x = random_input(arch.d_in, rng);
    const ForwardResult relu = forward_relu(plan, p, x);
    const ForwardResult dgn = forward_dgn(arch, p, p, x, x, GateMode::Hard, {});
    ASSERT_EQ(relu.trace.slots.size(), dgn.trace.slots.size());
    for (std::size_t s = 0; s < relu.trace.slots.size(); ++s) EXPECT_EQ(relu.trace.slots[s], dgn.trace.slots[s]);
  }
}

TEST(ForwardDgn, ConstantOneDependsOnXOnlyThroughGates) {
  Rng rng(28);
  const ArchSpec arch = make_fc(3, 3, 4);
  const ParamSet pf = random_params(arch, rng), pv = random_params(arch, rng);
  GateRouting one;
  one.constant_one_input = true;
  const Vec x = random_input(3, rng);
  const Vec a = random_input(3, rng), b = random_input(3, rng);
  EXPECT_EQ(forward_dgn(arch, pf, pv, x, a, GateMode::Hard, one).y, forward_dgn(arch, pf, pv, x, b, GateMode::Hard, one).y);
  EXPECT_NE(forward_dgn(arch, pf, pv, x, a, GateMode::Hard, {}).y, forward_dgn(arch, pf, pv, x, b, GateMode::Hard, {}).y);
}

TEST(ForwardDgn, PermutedRoutingChangesOutputButNotKernel) {
  Rng rng(29);
  const ArchSpec arch = make_fc(3, 4, 4);
  const NetPlan plan = build_plan(arch);
  const ParamSet pf = random_params(arch, rng), pv = random_params(arch, rng);
  const Vec x = random_input(3, rng), xp = perturb(x, 0.3, rng);
  GateRouting perm;
  perm.perm = {2, 0, 1};
  const ForwardResult id = forward_dgn(arch, pf, pv, x, x, GateMode::Hard, {});
  const ForwardResult pr = forward_dgn(arch, pf, pv, x, x, GateMode::Hard, perm);
  const GateTensor gxp = forward_relu(plan, pf, xp).gates;
  EXPECT_NE(id.y, pr.y);
  EXPECT_NEAR(npk_fc(x, xp, perm.apply(id.gates), perm.apply(gxp)), npk_fc(x, xp, id.gates, gxp), 1e-12);
}

TEST(ForwardDlgn, LinearFeaturePreActivations) {
  Rng rng(30);
  const ArchSpec arch = make_fc(3, 3, 4);
  const ParamSet pf = random_params(arch, rng), pv = random_params(arch, rng);
  const Vec x = random_input(3, rng);
  const ForwardResult r = forward_dlgn(arch, pf, pv, x, x, GateMode::Soft, {}, false);
  const auto W = oracle::fc_matrices(pf);
  Vec h1(4, 0.0), h2(4, 0.0);
  for (std::size_t o = 0; o < 4; ++o)
    for (std::size_t i = 0; i < 3; ++i) h1[o] += W[0][o][i] * x[i];
  for (std::size_t o = 0; o < 4; ++o)
    for (std::size_t i = 0; i < 4; ++i) h2[o] += W[1][o][i] * h1[i];
  for (std::size_t o = 0; o < 4; ++o) EXPECT_NEAR(r.feature_trace.pre[1][o], h2[o], 1e-12);
  EXPECT_TRUE(r.gates.valid());
}

TEST(ForwardDlgn, ZeroFeatureInputGivesHalfGates) {
  Rng rng(31);
  const ArchSpec arch = make_fc(3, 3, 4);
  const ParamSet pf = random_params(arch, rng), pv = random_params(arch, rng);
  const Vec zero(3, 0.0), x = random_input(3, rng);
  const ForwardResult r = forward_dlgn(arch, pf, pv, zero, x, GateMode::Soft, {}, false);
  for (const auto& layer : r.gates.layers)
    for (double g : layer) EXPECT_EQ(g, 0.5);
}

TEST(ForwardDlgn, ShallowFeatureGatesAreLayerLocal) {
  Rng rng(32);
  const ArchSpec arch = make_fc(3, 4, 4);
  const NetPlan splan = build_shallow_plan(arch);
  ParamSet pf = init_params(splan, layer_sigmas(arch, splan), rng, InitScheme::Gaussian);
  const ParamSet pv = random_params(arch, rng);
  const Vec x = random_input(3, rng);
  const ForwardResult before = forward_dlgn(arch, pf, pv, x, x, GateMode::Soft, {}, true);
  for (auto& v : pf[0].values()) v += 1.0;
  const ForwardResult after = forward_dlgn(arch, pf, pv, x, x, GateMode::Soft, {}, true);
  EXPECT_NE(before.gates[0], after.gates[0]);
  EXPECT_EQ(before.gates[1], after.gates[1]);
  EXPECT_EQ(before.gates[2], after.gates[2]);
}

TEST(Model, GradientSmallExamples) {
  // 2-2-1 net with all weights 1 at x = (1, 1): the output weight sees the
  // hidden activation 2.
  Rng rng(0);
  Model m = Model::create(make_fc(2, 2, 2), NetKind::DNN, GateMode::Hard, {}, rng);
  m.value = ParamSet::filled(m.value_plan, 1.0);
  const Vec x{1.0, 1.0};
  const GradVector g = grad(m, ParamSubset::Value, x);
  EXPECT_EQ(g.values[g.position(ParamRole::Value, 1, 0)], 2.0);
  EXPECT_EQ(g.values[g.position(ParamRole::Value, 1, 1)], 2.0);

  const Vec zero{0.0, 0.0};
  const GradVector z = grad(m, ParamSubset::Value, zero);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(z.values[g.position(ParamRole::Value, 0, i)], 0.0);
}

TEST(Model, GradientReportsKinks) {
  Rng rng(0);
  Model m = Model::create(make_fc(2, 2, 2), NetKind::DNN, GateMode::Hard, {}, rng);
  m.value = ParamSet::filled(m.value_plan, 1.0);
  const Vec x{1.0, -1.0};  // pre-activations exactly 0
  std::size_t kinks = 0;
  const GradVector g = grad(m, ParamSubset::Value, x, 0, &kinks);
  EXPECT_EQ(kinks, 2u);
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(Model, SoftDlgnGradientMatchesFiniteDifferences) {
  Rng rng(33);
  for (Family fam : {Family::FC, Family::CONV_GAP, Family::RES}) {
    const ArchSpec arch = random_small_arch(fam, rng);
    Model m = Model::create(arch, NetKind::DLGN, GateMode::Soft, {}, rng, InitScheme::Gaussian);
    const Vec x = random_input(arch.d_in, rng);
    const GradVector a = grad(m, ParamSubset::All, x);
    const GradVector b = finite_diff_grad(m, ParamSubset::All, x, 1e-5);
    EXPECT_LE(max_relative_error(a.values, b.values), 1e-4) << to_string(fam);
  }
}

TEST(Model, ScalarNtkExample) {
  // y = theta * x: NTK(x, x') = x x'.
  Rng rng(0);
  Model m = Model::create(make_fc(1, 1, 1), NetKind::DNN, GateMode::Hard, {}, rng);
  const Vec x{3.0}, xp{-2.0};
  const double k = dot(grad(m, ParamSubset::Value, x), grad(m, ParamSubset::Value, xp));
  EXPECT_DOUBLE_EQ(k, -6.0);
}
