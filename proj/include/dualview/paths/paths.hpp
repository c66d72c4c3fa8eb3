#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/params.hpp"
#include "dualview/arch/plan.hpp"
#include "dualview/arch/spec.hpp"
#include "dualview/core/error.hpp"

namespace dualview {

inline constexpr std::uint64_t kDefaultPathBudget = 1'000'000;

/// Element `index` of tensor (or gate layer) `tensor`.
struct TensorRef {
  std::uint32_t tensor = 0;
  std::uint32_t index = 0;
  bool operator==(const TensorRef&) const = default;
};

/// One input-to-output path.
///
/// `input` is I_0 (the input coordinate). `nodes` holds I_1, I_2, ... (the
/// hidden unit or filter entered at each weighted hidden layer). For
/// CONV_GAP, `windows[l]` is I^cv_{l+1} and `positions[l]` is I^f_{l+1}.
/// For RES, `mask` is the sub-FCN (bit j set = skippable block j included).
/// `weights` and `gates` list the weights traversed and the gates (pooling
/// mask included) the path passes through.
struct Path {
  std::uint32_t input = 0;
  std::vector<std::uint32_t> nodes;
  std::vector<std::uint32_t> windows;
  std::vector<std::uint32_t> positions;
  std::uint32_t mask = 0;
  std::size_t bundle = 0;
  std::vector<TensorRef> weights;
  std::vector<TensorRef> gates;
};

/// Every path of a network, in the documented order: FC paths are
/// lexicographic in (I_0, I_1, ...); RES paths are grouped by sub-FCN mask
/// (ascending) and lexicographic within; CONV_GAP paths are grouped by bundle
/// (lexicographic in (I^cv_1, I_1, ..., I^cv_dcv, I_dcv, fc nodes)) and
/// ordered by input coordinate within a bundle.
struct PathTable {
  ArchSpec arch;
  std::vector<Path> paths;
  std::size_t bundles = 0;

  std::size_t size() const { return paths.size(); }
};

/// Partition of CONV_GAP paths into weight-sharing bundles.
struct BundleTable {
  std::vector<std::vector<std::size_t>> members;
  std::size_t size() const { return members.size(); }
};

namespace detail {

inline void check_budget(const ArchSpec& arch, std::uint64_t budget) {
  const std::uint64_t p = arch.path_count();
  if (p > budget) throw BudgetExceeded(p, budget);
}

/// Advances an odometer of digits with the given radices; false on wrap.
inline bool odometer_next(std::vector<std::uint32_t>& digits, const std::vector<std::uint32_t>& radix) {
  for (std::size_t k = digits.size(); k-- > 0;) {
    if (++digits[k] < radix[k]) return true;
    digits[k] = 0;
  }
  return false;
}

/// Visits the paths of a chain of dense layers. `layers` are plan layer
/// indices (param index == layer index, gate index == layer index for all but
/// the last).
template <typename Fn>
void visit_dense_chain(const NetPlan& plan, const std::vector<std::size_t>& layers, std::uint32_t mask,
                       Path& path, Fn&& fn) {
  const std::size_t hops = layers.size();
  std::vector<std::uint32_t> radix(hops);
  radix[0] = static_cast<std::uint32_t>(plan.layers[layers[0]].in_channels);
  for (std::size_t k = 1; k < hops; ++k) radix[k] = static_cast<std::uint32_t>(plan.layers[layers[k]].in_channels);
  std::vector<std::uint32_t> digits(hops, 0);
  do {
    path.input = digits[0];
    path.nodes.assign(digits.begin() + 1, digits.end());
    path.mask = mask;
    path.weights.clear();
    path.gates.clear();
    for (std::size_t k = 0; k < hops; ++k) {
      const LayerPlan& layer = plan.layers[layers[k]];
      const std::uint32_t in = digits[k];
      const std::uint32_t out = k + 1 < hops ? digits[k + 1] : 0;
      path.weights.push_back({static_cast<std::uint32_t>(*layer.param),
                              static_cast<std::uint32_t>(out * layer.in_channels + in)});
      if (layer.gate) path.gates.push_back({static_cast<std::uint32_t>(*layer.gate), out});
    }
    fn(path);
  } while (odometer_next(digits, radix));
}

template <typename Fn>
void visit_conv(const ArchSpec& arch, const NetPlan& plan, Path& path, Fn&& fn) {
  const std::uint32_t P = static_cast<std::uint32_t>(arch.d_in);
  const std::uint32_t w = static_cast<std::uint32_t>(arch.width);
  const std::uint32_t wcv = static_cast<std::uint32_t>(arch.conv_window);
  const std::size_t dcv = arch.conv_layers, dfc = arch.fc_layers;
  // Bundle digits: (window, filter) per conv layer, then hidden fc nodes.
  std::vector<std::uint32_t> radix;
  for (std::size_t l = 0; l < dcv; ++l) {
    radix.push_back(wcv);
    radix.push_back(w);
  }
  for (std::size_t k = 0; k + 1 < dfc; ++k) radix.push_back(w);
  std::vector<std::uint32_t> digits(radix.size(), 0);
  std::size_t bundle = 0;
  const std::size_t pool_gate = *plan.pool_gate;
  do {
    for (std::uint32_t i = 0; i < P; ++i) {
      path.input = i;
      path.bundle = bundle;
      path.nodes.clear();
      path.windows.clear();
      path.positions.clear();
      path.weights.clear();
      path.gates.clear();
      std::uint32_t pos = i, prev = 0;
      for (std::size_t l = 0; l < dcv; ++l) {
        const std::uint32_t k = digits[2 * l], filt = digits[2 * l + 1];
        pos = (pos + P - k) % P;  // the unit at pos reads input position pos (+) k
        const LayerPlan& layer = plan.layers[l];
        path.windows.push_back(k);
        path.nodes.push_back(filt);
        path.positions.push_back(pos);
        path.weights.push_back({static_cast<std::uint32_t>(*layer.param),
                                static_cast<std::uint32_t>((k * layer.in_channels + prev) * layer.out_channels + filt)});
        path.gates.push_back({static_cast<std::uint32_t>(*layer.gate), filt * P + pos});
        prev = filt;
      }
      path.gates.push_back({static_cast<std::uint32_t>(pool_gate), prev * P + pos});
      for (std::size_t k = 0; k < dfc; ++k) {
        const LayerPlan& layer = plan.layers[dcv + 1 + k];
        const std::uint32_t out = k + 1 < dfc ? digits[2 * dcv + k] : 0;
        path.weights.push_back({static_cast<std::uint32_t>(*layer.param),
                                static_cast<std::uint32_t>(out * layer.in_channels + prev)});
        if (layer.gate) {
          path.nodes.push_back(out);
          path.gates.push_back({static_cast<std::uint32_t>(*layer.gate), out});
        }
        prev = out;
      }
      fn(path);
    }
    ++bundle;
  } while (!radix.empty() && odometer_next(digits, radix));
}

/// Plan layer indices making up sub-FCN `mask` of a RES plan.
inline std::vector<std::size_t> res_chain(const ArchSpec& arch, std::uint32_t mask) {
  const std::size_t db = arch.block_depth;
  std::vector<std::size_t> layers;
  for (std::size_t l = 0; l < db; ++l) layers.push_back(l);
  for (std::size_t j = 0; j < arch.skips; ++j)
    if (mask & (1u << j))
      for (std::size_t l = 0; l < db; ++l) layers.push_back(db + j * db + l);
  const std::size_t tail = db + arch.skips * db;
  for (std::size_t l = 0; l < db; ++l) layers.push_back(tail + l);
  return layers;
}

}  // namespace detail

/// Streams every path of `arch` to fn(const Path&) in table order without
/// materialising the table. Refuses networks with more than `budget` paths.
template <typename Fn>
void for_each_path(const ArchSpec& arch, Fn&& fn, std::uint64_t budget = kDefaultPathBudget) {
  detail::check_budget(arch, budget);
  detail::require(arch.heads == 1, "path enumeration needs a scalar-output network");
  const NetPlan plan = build_plan(arch);
  Path path;
  switch (arch.family) {
    case Family::FC: {
      std::vector<std::size_t> layers(plan.layers.size());
      for (std::size_t l = 0; l < layers.size(); ++l) layers[l] = l;
      detail::visit_dense_chain(plan, layers, 0, path, fn);
      break;
    }
    case Family::RES:
      for (std::uint32_t mask = 0; mask < (1u << arch.skips); ++mask)
        detail::visit_dense_chain(plan, detail::res_chain(arch, mask), mask, path, fn);
      break;
    case Family::CONV_GAP: detail::visit_conv(arch, plan, path, fn); break;
  }
}

inline PathTable enumerate_paths(const ArchSpec& arch, std::uint64_t budget = kDefaultPathBudget) {
  PathTable t;
  t.arch = arch;
  t.paths.reserve(static_cast<std::size_t>(arch.path_count() <= budget ? arch.path_count() : 0));
  for_each_path(arch, [&](const Path& p) { t.paths.push_back(p); }, budget);
  t.bundles = arch.family == Family::CONV_GAP ? t.paths.empty() ? 0 : t.paths.back().bundle + 1 : t.paths.size();
  return t;
}

inline BundleTable bundle_table(const PathTable& table) {
  detail::require(table.arch.family == Family::CONV_GAP, "bundle_table: bundles exist only for CONV_GAP");
  BundleTable b;
  b.members.resize(table.bundles);
  for (std::size_t i = 0; i < table.paths.size(); ++i) b.members[table.paths[i].bundle].push_back(i);
  return b;
}

/// Product of the gates on the path (pooling mask included).
inline double path_activity(const GateTensor& gates, const Path& p) {
  double a = 1.0;
  for (const auto& g : p.gates) a *= gates.layers[g.tensor][g.index];
  return a;
}

/// Product of the weights on the path.
inline double path_value(const ParamSet& params, const Path& p) {
  double v = 1.0;
  for (const auto& w : p.weights) v *= params[w.tensor][w.index];
  return v;
}

/// Neural path features and values. For CONV_GAP the entries are per
/// bundle; otherwise per path.
struct DualVectors {
  Vec npf;
  Vec npv;
  bool bundled = false;
};

inline DualVectors dual_vectors(const ArchSpec& arch, const ParamSet& params, std::span<const double> x,
                                const GateTensor& gates, std::uint64_t budget = kDefaultPathBudget) {
  detail::require(x.size() == arch.d_in, "dual_vectors: input length mismatch");
  DualVectors d;
  d.bundled = arch.family == Family::CONV_GAP;
  if (d.bundled) {
    d.npf.assign(arch.bundle_count(), 0.0);
    d.npv.assign(arch.bundle_count(), 0.0);
  }
  for_each_path(
      arch,
      [&](const Path& p) {
        const double f = x[p.input] * path_activity(gates, p);
        if (d.bundled) {
          d.npf[p.bundle] += f;
          d.npv[p.bundle] = path_value(params, p);
        } else {
          d.npf.push_back(f);
          d.npv.push_back(path_value(params, p));
        }
      },
      budget);
  return d;
}

/// Per-path features x(I_0) A(x, p) without bundling (all families).
inline Vec path_features(const ArchSpec& arch, std::span<const double> x, const GateTensor& gates,
                         std::uint64_t budget = kDefaultPathBudget) {
  Vec out;
  for_each_path(arch, [&](const Path& p) { out.push_back(x[p.input] * path_activity(gates, p)); }, budget);
  return out;
}

namespace detail {
inline bool path_on(const GateTensor& gates, const Path& p) {
  for (const auto& g : p.gates)
    if (!gates.is_pool(g.tensor) && gates.layers[g.tensor][g.index] == 0.0) return false;
  return true;
}
}  // namespace detail

/// overlap(i, x, x') for every input node i: the number of paths starting
/// at i that are active for both gate tensors (pooling mask ignored).
/// Counting needs hard gates.
inline std::vector<std::uint64_t> overlap_counts(const ArchSpec& arch, const GateTensor& gates_x,
                                                 const GateTensor& gates_xp,
                                                 std::uint64_t budget = kDefaultPathBudget) {
  if (gates_x.mode != GateMode::Hard || gates_xp.mode != GateMode::Hard)
    throw InvalidArgument("overlap: path counting is defined for hard gates only; use soft_overlap_diagnostic");
  std::vector<std::uint64_t> counts(arch.d_in, 0);
  for_each_path(
      arch,
      [&](const Path& p) {
        if (detail::path_on(gates_x, p) && detail::path_on(gates_xp, p)) ++counts[p.input];
      },
      budget);
  return counts;
}

inline std::uint64_t overlap(std::size_t i, const GateTensor& gates_x, const GateTensor& gates_xp,
                             const ArchSpec& arch, std::uint64_t budget = kDefaultPathBudget) {
  detail::require(i < arch.d_in, "overlap: input node out of range");
  return overlap_counts(arch, gates_x, gates_xp, budget)[i];
}

/// Diagnostic relaxation for soft gates (not a path count): per input node,
/// sum over paths of the product of G(x) G(x') along the path, pooling mask
/// ignored.
inline Vec soft_overlap_diagnostic(const ArchSpec& arch, const GateTensor& gates_x, const GateTensor& gates_xp,
                                   std::uint64_t budget = kDefaultPathBudget) {
  Vec out(arch.d_in, 0.0);
  for_each_path(
      arch,
      [&](const Path& p) {
        double a = 1.0;
        for (const auto& g : p.gates)
          if (!gates_x.is_pool(g.tensor)) a *= gates_x.layers[g.tensor][g.index] * gates_xp.layers[g.tensor][g.index];
        out[p.input] += a;
      },
      budget);
  return out;
}

// ---------------------------------------------------------------------------
// Sub-FCNs of a residual network

/// Sub-FCN J of a RES network: the FC network through block 1, the included
/// skippable blocks and the final block.
struct SubFcnMask {
  std::uint32_t mask = 0;
  ArchSpec fc;                       // FC spec of depth (|J|+2) d_blk
  std::vector<std::size_t> layers;   // RES plan layer (= param) indices, in order
  std::vector<std::size_t> gates;    // RES gate indices, in order

  std::size_t included() const { return static_cast<std::size_t>(__builtin_popcount(mask)); }
};

inline std::vector<SubFcnMask> enumerate_subfcns(const ArchSpec& arch) {
  detail::require(arch.family == Family::RES, "enumerate_subfcns: family must be RES");
  arch.validate();
  std::vector<SubFcnMask> out;
  for (std::uint32_t mask = 0; mask < (1u << arch.skips); ++mask) {
    SubFcnMask s;
    s.mask = mask;
    s.layers = detail::res_chain(arch, mask);
    s.gates.assign(s.layers.begin(), s.layers.end() - 1);
    s.fc = make_fc(arch.d_in, s.layers.size(), arch.width, arch.c_scale);
    s.fc.beta = arch.beta;
    s.fc.heads = arch.heads;
    out.push_back(std::move(s));
  }
  return out;
}

inline ParamSet restrict_params(const ParamSet& res_params, const SubFcnMask& sub) {
  ParamSet p;
  for (auto l : sub.layers) p.tensors.push_back(res_params[l]);
  return p;
}

inline GateTensor restrict_gates(const GateTensor& res_gates, const SubFcnMask& sub) {
  GateTensor g;
  g.mode = res_gates.mode;
  for (auto l : sub.gates) g.layers.push_back(res_gates.layers[l]);
  return g;
}

}  // namespace dualview
