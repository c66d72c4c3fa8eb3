#pragma once

#include <span>
#include <vector>

#include "dualview/arch/params.hpp"
#include "dualview/arch/plan.hpp"
#include "dualview/core/error.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

/// Everything a backward pass needs from a forward pass.
struct Trace {
  std::vector<Vec> slots;  // slots[0] is the input, slots[l+1] the output of layer l
  std::vector<Vec> pre;    // pre-activation of each layer (empty for pooling)
  std::vector<Vec> mult;   // multiplier applied to the pre-activation (empty if ungated)

  const Vec& output() const { return slots.back(); }
};

namespace detail {

inline Vec linear_forward(const LayerPlan& layer, const ParamTensor& w, const Vec& in) {
  Vec q(layer.gate_size(), 0.0);
  if (layer.kind == LayerKind::Dense) {
    const std::size_t ni = layer.in_channels;
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
      const double* row = &w.values()[o * ni];
      double s = 0.0;
      for (std::size_t i = 0; i < ni; ++i) s += row[i] * in[i];
      q[o] = s;
    }
    return q;
  }
  // q(o, f) = sum_{k, i} W[k, i, o] * in(i, f (+) k), with (+) circular.
  const std::size_t P = layer.positions, ci = layer.in_channels, co = layer.out_channels;
  for (std::size_t k = 0; k < layer.window; ++k)
    for (std::size_t i = 0; i < ci; ++i) {
      const double* src = &in[i * P];
      for (std::size_t o = 0; o < co; ++o) {
        const double wt = w[(k * ci + i) * co + o];
        if (wt == 0.0) continue;
        double* dst = &q[o * P];
        for (std::size_t f = 0; f < P; ++f) {
          const std::size_t idx = f + k < P ? f + k : f + k - P;
          dst[f] += wt * src[idx];
        }
      }
    }
  return q;
}

inline void linear_backward(const LayerPlan& layer, const ParamTensor& w, const Vec& in, const Vec& dq,
                            ParamTensor* dw, Vec& d_in) {
  if (layer.kind == LayerKind::Dense) {
    const std::size_t ni = layer.in_channels;
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
      const double g = dq[o];
      if (g == 0.0) continue;
      const double* row = &w.values()[o * ni];
      if (dw) {
        double* drow = &dw->values()[o * ni];
        for (std::size_t i = 0; i < ni; ++i) drow[i] += g * in[i];
      }
      for (std::size_t i = 0; i < ni; ++i) d_in[i] += g * row[i];
    }
    return;
  }
  const std::size_t P = layer.positions, ci = layer.in_channels, co = layer.out_channels;
  for (std::size_t k = 0; k < layer.window; ++k)
    for (std::size_t i = 0; i < ci; ++i) {
      const double* src = &in[i * P];
      double* dsrc = &d_in[i * P];
      for (std::size_t o = 0; o < co; ++o) {
        const std::size_t widx = (k * ci + i) * co + o;
        const double wt = w[widx];
        const double* g = &dq[o * P];
        double acc = 0.0;
        for (std::size_t f = 0; f < P; ++f) {
          const std::size_t idx = f + k < P ? f + k : f + k - P;
          acc += g[f] * src[idx];
          dsrc[idx] += wt * g[f];
        }
        if (dw) (*dw)[widx] += acc;
      }
    }
}

}  // namespace detail

/// Runs `plan` on `x`. For every gated layer, multiplier(layer, q) returns
/// the array multiplied elementwise into the pre-activation q (ReLU
/// indicator, external gates, ones for a linear layer, or the pooling mask).
template <typename MultiplierFn>
Trace propagate(const NetPlan& plan, const ParamSet& params, std::span<const double> x, MultiplierFn&& multiplier) {
  detail::require(x.size() == plan.input_size, "forward: input has length " + std::to_string(x.size()) +
                                                   ", expected " + std::to_string(plan.input_size));
  Trace t;
  t.slots.reserve(plan.layers.size() + 1);
  t.slots.emplace_back(x.begin(), x.end());
  t.pre.resize(plan.layers.size());
  t.mult.resize(plan.layers.size());
  for (std::size_t l = 0; l < plan.layers.size(); ++l) {
    const LayerPlan& layer = plan.layers[l];
    const Vec& in = t.slots[layer.input];
    Vec z;
    if (layer.kind == LayerKind::Pool) {
      Vec m = multiplier(l, in);
      detail::require(m.size() == in.size(), "forward: pooling mask has the wrong size");
      z.assign(layer.out_channels, 0.0);
      for (std::size_t o = 0; o < layer.out_channels; ++o)
        for (std::size_t f = 0; f < layer.positions; ++f) z[o] += in[o * layer.positions + f] * m[o * layer.positions + f];
      t.mult[l] = std::move(m);
    } else {
      Vec q = detail::linear_forward(layer, params[*layer.param], in);
      z = q;
      if (layer.gate) {
        Vec m = multiplier(l, q);
        detail::require(m.size() == q.size(), "forward: gate layer " + std::to_string(*layer.gate) +
                                                  " has size " + std::to_string(m.size()) + ", expected " +
                                                  std::to_string(q.size()));
        for (std::size_t i = 0; i < z.size(); ++i) z[i] *= m[i];
        t.mult[l] = std::move(m);
      }
      t.pre[l] = std::move(q);
    }
    if (layer.residual) {
      const Vec& r = t.slots[*layer.residual];
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += r[i];
    }
    t.slots.push_back(std::move(z));
  }
  return t;
}

/// Reverse pass through a recorded trace.
///
/// d_output is dL/d(output) (may be empty for gate-only plans). extra_dpre,
/// when given, adds dL/dq for individual layers (gradient arriving through
/// gates computed from those pre-activations). Multipliers are treated as
/// constants; their gradient dL/dm is written to d_mult when requested.
inline void backpropagate(const NetPlan& plan, const ParamSet& params, const Trace& trace,
                          std::span<const double> d_output, const std::vector<Vec>* extra_dpre, ParamSet* d_params,
                          std::vector<Vec>* d_mult, Vec* d_input = nullptr) {
  std::vector<Vec> d_slots(trace.slots.size());
  for (std::size_t s = 0; s < trace.slots.size(); ++s) d_slots[s].assign(trace.slots[s].size(), 0.0);
  if (!d_output.empty()) {
    detail::require(d_output.size() == trace.output().size(), "backward: output gradient has the wrong size");
    std::copy(d_output.begin(), d_output.end(), d_slots.back().begin());
  }
  if (d_mult) d_mult->assign(plan.layers.size(), Vec{});
  for (std::size_t l = plan.layers.size(); l-- > 0;) {
    const LayerPlan& layer = plan.layers[l];
    const Vec& dz = d_slots[l + 1];
    if (layer.residual) {
      Vec& dr = d_slots[*layer.residual];
      for (std::size_t i = 0; i < dz.size(); ++i) dr[i] += dz[i];
    }
    Vec& d_in = d_slots[layer.input];
    if (layer.kind == LayerKind::Pool) {
      const Vec& m = trace.mult[l];
      for (std::size_t o = 0; o < layer.out_channels; ++o)
        for (std::size_t f = 0; f < layer.positions; ++f)
          d_in[o * layer.positions + f] += dz[o] * m[o * layer.positions + f];
      continue;
    }
    Vec dq = dz;
    if (layer.gate) {
      const Vec& m = trace.mult[l];
      if (d_mult) {
        Vec dm(dz.size());
        for (std::size_t i = 0; i < dz.size(); ++i) dm[i] = dz[i] * trace.pre[l][i];
        (*d_mult)[l] = std::move(dm);
      }
      for (std::size_t i = 0; i < dq.size(); ++i) dq[i] *= m[i];
    }
    if (extra_dpre && l < extra_dpre->size() && !(*extra_dpre)[l].empty()) {
      const Vec& e = (*extra_dpre)[l];
      for (std::size_t i = 0; i < dq.size(); ++i) dq[i] += e[i];
    }
    detail::linear_backward(layer, params[*layer.param], trace.slots[layer.input], dq,
                            d_params ? &(*d_params)[*layer.param] : nullptr, d_in);
  }
  if (d_input) *d_input = d_slots[0];
}

}  // namespace dualview
