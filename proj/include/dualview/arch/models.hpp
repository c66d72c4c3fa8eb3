#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/network.hpp"
#include "dualview/arch/params.hpp"
#include "dualview/arch/plan.hpp"
#include "dualview/arch/spec.hpp"
#include "dualview/core/finite_diff.hpp"
#include "dualview/core/rng.hpp"

namespace dualview {

/// Result of a single forward pass. `y` is head 0 of `logits`.
struct ForwardResult {
  double y = 0.0;
  Vec logits;
  GateTensor gates;  // gates produced (relu / dgn / dlgn) or consumed (gated)
  Trace trace;       // value-network trace
  Trace feature_trace;
};

namespace detail {

inline ForwardResult finish(Trace trace) {
  ForwardResult r;
  r.logits = trace.output();
  r.y = r.logits.empty() ? 0.0 : r.logits[0];
  r.trace = std::move(trace);
  return r;
}

inline Vec relu_mask(const Vec& q) {
  Vec m(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) m[i] = q[i] > 0.0 ? 1.0 : 0.0;
  return m;
}

/// Gate tensor over `plan` from recorded feature pre-activations; `pre_of(g)`
/// returns the pre-activation feeding gate layer g.
template <typename PreFn>
GateTensor gates_from(const NetPlan& value_plan, PreFn&& pre_of, GateMode mode, double beta) {
  GateTensor gates;
  gates.mode = mode;
  gates.pool_layer = value_plan.pool_gate;
  gates.layers.resize(value_plan.gate_count());
  for (std::size_t g = 0; g < value_plan.gate_count(); ++g) {
    if (value_plan.pool_gate && *value_plan.pool_gate == g) {
      gates.layers[g] = pool_mask(value_plan);
      continue;
    }
    const Vec& q = pre_of(g);
    Vec& out = gates.layers[g];
    out.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = gate_fn(q[i], mode, beta);
  }
  return gates;
}

inline Vec ones(std::size_t n) { return Vec(n, 1.0); }

}  // namespace detail

/// Plain ReLU network. Gates are recorded as 1{q > 0}.
inline ForwardResult forward_relu(const NetPlan& plan, const ParamSet& params, std::span<const double> x) {
  params.check_against(plan);
  const Vec mask = plan.pool_gate ? pool_mask(plan) : Vec{};
  Trace t = propagate(plan, params, x, [&](std::size_t l, const Vec& q) {
    return plan.layers[l].kind == LayerKind::Pool ? mask : detail::relu_mask(q);
  });
  GateTensor gates = detail::gates_from(
      plan, [&](std::size_t g) -> const Vec& { return t.pre[plan.gate_layer[g]]; }, GateMode::Hard, 1.0);
  ForwardResult r = detail::finish(std::move(t));
  r.gates = std::move(gates);
  return r;
}

inline ForwardResult forward_relu(const ArchSpec& arch, const ParamSet& params, std::span<const double> x) {
  return forward_relu(build_plan(arch), params, x);
}

/// Value network of GaLUs: every gated pre-activation is multiplied by the
/// routed external gate. With routing.constant_one_input the input is
/// replaced by the all-ones vector.
inline ForwardResult forward_gated(const NetPlan& plan, const ParamSet& params_v, const GateTensor& external_gates,
                                   const GateRouting& routing, std::span<const double> x_v) {
  params_v.check_against(plan);
  routing.validate(plan);
  detail::require(external_gates.size() == plan.gate_count(), "forward_gated: gate tensor has " +
                                                                  std::to_string(external_gates.size()) +
                                                                  " layers, expected " +
                                                                  std::to_string(plan.gate_count()));
  const GateTensor routed = routing.apply(external_gates);
  const Vec one = routing.constant_one_input ? detail::ones(plan.input_size) : Vec{};
  std::span<const double> input = routing.constant_one_input ? std::span<const double>(one) : x_v;
  Trace t = propagate(plan, params_v, input,
                      [&](std::size_t l, const Vec&) { return routed.layers[*plan.layers[l].gate]; });
  ForwardResult r = detail::finish(std::move(t));
  r.gates = routed;
  return r;
}

/// How a gating (feature) network turns its input into pre-activations.
enum class FeatureKind { Relu, Linear, Shallow };

/// Gates of a feature network of the given kind. `feature_plan` is
/// build_plan(arch) for Relu/Linear and build_shallow_plan(arch) for Shallow.
inline std::pair<GateTensor, Trace> feature_gates(const NetPlan& value_plan, const NetPlan& feature_plan,
                                                  const ParamSet& params_f, std::span<const double> x_f,
                                                  FeatureKind kind, GateMode mode, double beta) {
  params_f.check_against(feature_plan);
  const Vec mask = feature_plan.pool_gate ? pool_mask(feature_plan) : Vec{};
  Trace t = propagate(feature_plan, params_f, x_f, [&](std::size_t l, const Vec& q) {
    if (feature_plan.layers[l].kind == LayerKind::Pool) return mask;
    return kind == FeatureKind::Relu ? detail::relu_mask(q) : detail::ones(q.size());
  });
  GateTensor g = detail::gates_from(
      value_plan, [&](std::size_t gi) -> const Vec& { return t.pre[feature_plan.gate_layer[gi]]; }, mode, beta);
  return {std::move(g), std::move(t)};
}

/// DGN: ReLU feature network on x_f gates a GaLU value network on x_v.
inline ForwardResult forward_dgn(const ArchSpec& arch, const ParamSet& params_f, const ParamSet& params_v,
                                 std::span<const double> x_f, std::span<const double> x_v, GateMode mode,
                                 const GateRouting& routing) {
  const NetPlan plan = build_plan(arch);
  auto [gates, ftrace] = feature_gates(plan, plan, params_f, x_f, FeatureKind::Relu, mode, arch.beta);
  ForwardResult r = forward_gated(plan, params_v, gates, routing, x_v);
  r.gates = std::move(gates);
  r.feature_trace = std::move(ftrace);
  return r;
}

/// DLGN: the feature network is deep linear (or, with shallow_features, one
/// linear map of x_f per gate layer).
inline ForwardResult forward_dlgn(const ArchSpec& arch, const ParamSet& params_f, const ParamSet& params_v,
                                  std::span<const double> x_f, std::span<const double> x_v, GateMode mode,
                                  const GateRouting& routing, bool shallow_features) {
  const NetPlan plan = build_plan(arch);
  const NetPlan fplan = shallow_features ? build_shallow_plan(arch) : plan;
  auto [gates, ftrace] = feature_gates(plan, fplan, params_f, x_f,
                                       shallow_features ? FeatureKind::Shallow : FeatureKind::Linear, mode,
                                       arch.beta);
  ForwardResult r = forward_gated(plan, params_v, gates, routing, x_v);
  r.gates = std::move(gates);
  r.feature_trace = std::move(ftrace);
  return r;
}

// ---------------------------------------------------------------------------
// Trainable models

enum class NetKind { DNN, DGN, DLGN, DLGN_SF };

inline std::string_view to_string(NetKind k) {
  switch (k) {
    case NetKind::DNN: return "DNN";
    case NetKind::DGN: return "DGN";
    case NetKind::DLGN: return "DLGN";
    case NetKind::DLGN_SF: return "DLGN_SF";
  }
  return "?";
}

enum class ParamSubset { Value, Feature, All };

/// A DNN, DGN, DLGN or DLGN-SF with its weights. A DNN keeps its weights in
/// `value` and has no feature network.
struct Model {
  ArchSpec arch;
  NetKind kind = NetKind::DNN;
  GateMode mode = GateMode::Hard;
  GateRouting routing;
  NetPlan value_plan;
  NetPlan feature_plan;
  ParamSet feature;
  ParamSet value;

  struct Pass {
    ForwardResult value;
    Trace feature;
    GateTensor gates;  // un-routed feature gates
  };

  static Model create(const ArchSpec& arch, NetKind kind, GateMode mode, GateRouting routing, Rng& rng,
                      InitScheme scheme = InitScheme::Bernoulli) {
    Model m;
    m.arch = arch;
    m.kind = kind;
    m.mode = mode;
    m.routing = std::move(routing);
    m.value_plan = build_plan(arch);
    m.routing.validate(m.value_plan);
    if (kind == NetKind::DNN) {
      detail::require(m.routing.perm.empty() && !m.routing.constant_one_input,
                      "Model: a DNN has no gate routing or constant-1 input");
      m.value = init_params(m.value_plan, layer_sigmas(arch, m.value_plan), rng, scheme);
      return m;
    }
    m.feature_plan = kind == NetKind::DLGN_SF ? build_shallow_plan(arch) : m.value_plan;
    m.feature = init_params(m.feature_plan, layer_sigmas(arch, m.feature_plan), rng, scheme);
    m.value = init_params(m.value_plan, layer_sigmas(arch, m.value_plan), rng, scheme);
    return m;
  }

  FeatureKind feature_kind() const {
    switch (kind) {
      case NetKind::DGN: return FeatureKind::Relu;
      case NetKind::DLGN: return FeatureKind::Linear;
      default: return FeatureKind::Shallow;
    }
  }

  Pass forward(std::span<const double> x) const {
    Pass p;
    if (kind == NetKind::DNN) {
      p.value = forward_relu(value_plan, value, x);
      p.gates = p.value.gates;
      return p;
    }
    auto [gates, ftrace] = feature_gates(value_plan, feature_plan, feature, x, feature_kind(), mode, arch.beta);
    p.value = forward_gated(value_plan, value, gates, routing, x);
    p.gates = std::move(gates);
    p.feature = std::move(ftrace);
    return p;
  }

  Vec logits(std::span<const double> x) const { return forward(x).value.logits; }

  /// Accumulates d(sum_h d_logits[h] * logits[h]) into the given gradients
  /// (null pointers skip that network). Gradients reach the feature network
  /// only through soft gates. Returns the number of hard-gate pre-activations
  /// sitting exactly at 0 (where the subgradient 0 is used).
  std::size_t backward(const Pass& pass, std::span<const double> d_logits, ParamSet* d_feature,
                       ParamSet* d_value) const {
    std::size_t kinks = 0;
    const Trace& vt = pass.value.trace;
    if (kind == NetKind::DNN) {
      for (std::size_t l = 0; l < value_plan.layers.size(); ++l)
        if (value_plan.layers[l].gate && value_plan.layers[l].kind != LayerKind::Pool)
          for (double q : vt.pre[l]) kinks += q == 0.0;
      backpropagate(value_plan, value, vt, d_logits, nullptr, d_value, nullptr);
      return kinks;
    }
    const bool feature_flow = d_feature && mode == GateMode::Soft;
    std::vector<Vec> d_mult;
    backpropagate(value_plan, value, vt, d_logits, nullptr, d_value, feature_flow ? &d_mult : nullptr);
    if (mode == GateMode::Hard)
      for (std::size_t g = 0; g < value_plan.gate_count(); ++g) {
        if (value_plan.pool_gate && *value_plan.pool_gate == g) continue;
        for (double q : pass.feature.pre[feature_plan.gate_layer[g]]) kinks += q == 0.0;
      }
    if (!feature_flow) return kinks;
    // Value layer l used feature gate routing.source(gate(l)).
    std::vector<Vec> extra(feature_plan.layers.size());
    for (std::size_t l = 0; l < value_plan.layers.size(); ++l) {
      const LayerPlan& layer = value_plan.layers[l];
      if (!layer.gate || layer.kind == LayerKind::Pool) continue;
      const std::size_t src_gate = routing.source(*layer.gate);
      const std::size_t fl = feature_plan.gate_layer[src_gate];
      const Vec& q = pass.feature.pre[fl];
      Vec& e = extra[fl];
      if (e.empty()) e.assign(q.size(), 0.0);
      for (std::size_t i = 0; i < q.size(); ++i) e[i] += d_mult[l][i] * gate_derivative(q[i], mode, arch.beta);
    }
    backpropagate(feature_plan, feature, pass.feature, {}, &extra, d_feature, nullptr);
    return kinks;
  }

  // Flat parameter views, feature tensors first.
  GradVector::Segment segment(ParamRole role, std::size_t tensor, std::size_t offset) const {
    const ParamSet& ps = role == ParamRole::Feature ? feature : value;
    return {role, tensor, offset, ps[tensor].size()};
  }

  std::vector<GradVector::Segment> layout(ParamSubset subset) const {
    std::vector<GradVector::Segment> out;
    std::size_t off = 0;
    auto add = [&](ParamRole role, const ParamSet& ps) {
      for (std::size_t t = 0; t < ps.size(); ++t) {
        out.push_back({role, t, off, ps[t].size()});
        off += ps[t].size();
      }
    };
    if (subset != ParamSubset::Value) add(ParamRole::Feature, feature);
    if (subset != ParamSubset::Feature) add(ParamRole::Value, value);
    return out;
  }

  Vec flatten(ParamSubset subset) const {
    Vec out;
    for (const auto& s : layout(subset)) {
      const ParamSet& ps = s.role == ParamRole::Feature ? feature : value;
      auto v = ps[s.tensor].values();
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  }

  void assign(ParamSubset subset, std::span<const double> flat) {
    for (const auto& s : layout(subset)) {
      ParamSet& ps = s.role == ParamRole::Feature ? feature : value;
      auto v = ps[s.tensor].values();
      detail::require(s.offset + s.count <= flat.size(), "Model::assign: flat vector too short");
      std::copy(flat.begin() + std::ptrdiff_t(s.offset), flat.begin() + std::ptrdiff_t(s.offset + s.count), v.begin());
    }
  }
};

/// Gradient of output head `head` with respect to the selected parameters.
inline GradVector grad(const Model& model, ParamSubset subset, std::span<const double> x, std::size_t head = 0,
                       std::size_t* nondifferentiable_points = nullptr) {
  const auto pass = model.forward(x);
  Vec d_out(pass.value.logits.size(), 0.0);
  detail::require(head < d_out.size(), "grad: head out of range");
  d_out[head] = 1.0;
  ParamSet df = ParamSet::zeros_like(model.kind == NetKind::DNN ? NetPlan{} : model.feature_plan);
  ParamSet dv = ParamSet::zeros_like(model.value_plan);
  const std::size_t kinks = model.backward(pass, d_out, subset != ParamSubset::Value ? &df : nullptr,
                                           subset != ParamSubset::Feature ? &dv : nullptr);
  if (nondifferentiable_points) *nondifferentiable_points = kinks;
  GradVector g;
  g.layout = model.layout(subset);
  for (const auto& s : g.layout) {
    auto v = (s.role == ParamRole::Feature ? df : dv)[s.tensor].values();
    g.values.insert(g.values.end(), v.begin(), v.end());
  }
  return g;
}

/// Central-difference counterpart of grad().
inline GradVector finite_diff_grad(const Model& model, ParamSubset subset, std::span<const double> x, double step,
                                   std::size_t head = 0) {
  Model work = model;
  const Vec theta = model.flatten(subset);
  Vec input(x.begin(), x.end());
  GradVector g;
  g.layout = model.layout(subset);
  g.values = finite_diff_grad(
      [&](std::span<const double> t) {
        work.assign(subset, t);
        return work.logits(input)[head];
      },
      theta, step);
  return g;
}

/// Gradient of the value network with respect to its weights, gates fixed.
inline GradVector value_grad(const NetPlan& plan, const ParamSet& params_v, const GateTensor& gates,
                             const GateRouting& routing, std::span<const double> x_v) {
  const ForwardResult r = forward_gated(plan, params_v, gates, routing, x_v);
  ParamSet dv = ParamSet::zeros_like(plan);
  Vec d_out(r.logits.size(), 0.0);
  d_out[0] = 1.0;
  backpropagate(plan, params_v, r.trace, d_out, nullptr, &dv, nullptr);
  GradVector g;
  std::size_t off = 0;
  for (std::size_t t = 0; t < dv.size(); ++t) {
    g.layout.push_back({ParamRole::Value, t, off, dv[t].size()});
    off += dv[t].size();
    auto v = dv[t].values();
    g.values.insert(g.values.end(), v.begin(), v.end());
  }
  return g;
}

}  // namespace dualview
