#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "dualview/arch/spec.hpp"

namespace dualview {

enum class LayerKind { Dense, Conv, Pool };

/// One step of a network's computation graph.
///
/// Activations live in numbered slots: slot 0 is the input and layer l writes
/// slot l+1. Multi-position activations are stored channel-major
/// ([channel][position]).
struct LayerPlan {
  LayerKind kind = LayerKind::Dense;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t positions = 1;  // spatial extent of the input (conv and pool)
  std::size_t window = 0;     // conv only
  std::size_t input = 0;      // slot read by this layer
  std::optional<std::size_t> gate;      // gate layer applied to the pre-activation
  std::optional<std::size_t> residual;  // slot added to the gated output
  std::optional<std::size_t> param;     // weight tensor index

  std::size_t in_size() const { return in_channels * positions; }
  std::size_t out_size() const { return kind == LayerKind::Pool ? out_channels : out_channels * positions; }
  /// Size of the pre-activation / gate array.
  std::size_t gate_size() const { return kind == LayerKind::Dense ? out_channels : out_channels * positions; }
};

struct NetPlan {
  Family family = Family::FC;
  std::size_t input_size = 0;
  std::size_t output_size = 0;  // 0 for gate-only (shallow feature) plans
  std::vector<LayerPlan> layers;
  std::vector<std::size_t> gate_sizes;
  std::vector<std::size_t> gate_layer;  // gate index -> layer index
  std::optional<std::size_t> pool_gate;
  std::vector<std::vector<std::size_t>> param_shapes;
  std::vector<std::size_t> param_layer;  // param index -> layer index

  std::size_t gate_count() const { return gate_sizes.size(); }
  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& s : param_shapes) n += shape_size_of(s);
    return n;
  }

 private:
  static std::size_t shape_size_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }
};

namespace detail {

class PlanBuilder {
 public:
  explicit PlanBuilder(Family family, std::size_t input_size) {
    plan_.family = family;
    plan_.input_size = input_size;
  }

  std::size_t next_slot() const { return plan_.layers.size() + 1; }

  void dense(std::size_t in, std::size_t out, bool gated, std::optional<std::size_t> residual = {},
             std::optional<std::size_t> input = {}) {
    LayerPlan l;
    l.kind = LayerKind::Dense;
    l.in_channels = in;
    l.out_channels = out;
    l.input = input.value_or(plan_.layers.size());
    l.residual = residual;
    add_param(l, {out, in});
    if (gated) add_gate(l);
    plan_.layers.push_back(l);
  }

  void conv(std::size_t window, std::size_t in, std::size_t out, std::size_t positions, bool gated,
            std::optional<std::size_t> input = {}) {
    LayerPlan l;
    l.kind = LayerKind::Conv;
    l.window = window;
    l.in_channels = in;
    l.out_channels = out;
    l.positions = positions;
    l.input = input.value_or(plan_.layers.size());
    add_param(l, {window, in, out});
    if (gated) add_gate(l);
    plan_.layers.push_back(l);
  }

  void pool(std::size_t channels, std::size_t positions) {
    LayerPlan l;
    l.kind = LayerKind::Pool;
    l.in_channels = channels;
    l.out_channels = channels;
    l.positions = positions;
    l.input = plan_.layers.size();
    add_gate(l);
    plan_.pool_gate = *l.gate;
    plan_.layers.push_back(l);
  }

  /// Reserves a gate index owned by no layer of this plan (the pooling mask
  /// slot in a shallow feature plan).
  void skip_gate(std::size_t size) {
    plan_.gate_sizes.push_back(size);
    plan_.gate_layer.push_back(SIZE_MAX);
  }

  NetPlan finish(std::size_t output_size) {
    plan_.output_size = output_size;
    return plan_;
  }

 private:
  void add_param(LayerPlan& l, std::vector<std::size_t> shape) {
    l.param = plan_.param_shapes.size();
    plan_.param_shapes.push_back(std::move(shape));
    plan_.param_layer.push_back(plan_.layers.size());
  }
  void add_gate(LayerPlan& l) {
    l.gate = plan_.gate_sizes.size();
    plan_.gate_sizes.push_back(l.gate_size());
    plan_.gate_layer.push_back(plan_.layers.size());
  }

  NetPlan plan_;
};

}  // namespace detail

/// Computation graph of the (value or deep feature) network for `arch`.
inline NetPlan build_plan(const ArchSpec& arch) {
  arch.validate();
  const std::size_t w = arch.width;
  detail::PlanBuilder b(arch.family, arch.d_in);
  switch (arch.family) {
    case Family::FC: {
      std::size_t in = arch.d_in;
      for (std::size_t l = 0; l + 1 < arch.depth; ++l) {
        b.dense(in, w, true);
        in = w;
      }
      b.dense(in, arch.heads, false);
      break;
    }
    case Family::CONV_GAP: {
      std::size_t in = 1;
      for (std::size_t l = 0; l < arch.conv_layers; ++l) {
        b.conv(arch.conv_window, in, w, arch.d_in, true);
        in = w;
      }
      b.pool(w, arch.d_in);
      for (std::size_t l = 0; l + 1 < arch.fc_layers; ++l) b.dense(w, w, true);
      b.dense(w, arch.heads, false);
      break;
    }
    case Family::RES: {
      const std::size_t db = arch.block_depth;
      std::size_t in = arch.d_in;
      for (std::size_t l = 0; l < db; ++l) {
        b.dense(in, w, true);
        in = w;
      }
      for (std::size_t j = 0; j < arch.skips; ++j) {
        const std::size_t block_input = b.next_slot() - 1;
        for (std::size_t l = 0; l < db; ++l) {
          const bool last = l + 1 == db;
          b.dense(w, w, true, last ? std::optional<std::size_t>(block_input) : std::nullopt);
        }
      }
      for (std::size_t l = 0; l + 1 < db; ++l) b.dense(w, w, true);
      b.dense(in, arch.heads, false);
      break;
    }
  }
  return b.finish(arch.heads);
}

/// Shallow feature plan: every gate of build_plan(arch) is produced by one
/// linear map of the input (a circular convolution for convolutional gate
/// layers, a dense map otherwise). The pooling mask is not produced here.
inline NetPlan build_shallow_plan(const ArchSpec& arch) {
  const NetPlan value = build_plan(arch);
  detail::PlanBuilder b(arch.family, arch.d_in);
  for (std::size_t g = 0; g < value.gate_count(); ++g) {
    const LayerPlan& src = value.layers[value.gate_layer[g]];
    switch (src.kind) {
      case LayerKind::Pool: b.skip_gate(value.gate_sizes[g]); break;
      case LayerKind::Conv: b.conv(arch.conv_window, 1, src.out_channels, arch.d_in, true, 0); break;
      case LayerKind::Dense: b.dense(arch.d_in, src.out_channels, true, std::nullopt, 0); break;
    }
  }
  return b.finish(0);
}

/// Per-tensor Bernoulli scale: c/sqrt(w) for dense layers and
/// c/sqrt(w * w_cv) for convolutional layers.
inline std::vector<double> layer_sigmas(const ArchSpec& arch, const NetPlan& plan) {
  std::vector<double> s;
  for (std::size_t p = 0; p < plan.param_shapes.size(); ++p) {
    const auto& layer = plan.layers[plan.param_layer[p]];
    const double fan = layer.kind == LayerKind::Conv ? double(arch.width * arch.conv_window) : double(arch.width);
    s.push_back(arch.c_scale / std::sqrt(fan));
  }
  return s;
}

}  // namespace dualview
