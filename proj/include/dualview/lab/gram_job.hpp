#pragma once

#include <string>
#include <vector>

#include "dualview/arch/models.hpp"
#include "dualview/kernels/gram.hpp"
#include "dualview/kernels/invariance.hpp"
#include "dualview/kernels/npk.hpp"
#include "dualview/kernels/ntk.hpp"
#include "dualview/paths/paths.hpp"

namespace dualview {

inline KernelTag kernel_kind_tag(const std::string& kind) {
  if (kind == "npk") return KernelTag::NpkDirect;
  if (kind == "npk-brute") return KernelTag::NpkBrute;
  if (kind == "ntk") return KernelTag::Ntk;
  if (kind == "ntk-mc") return KernelTag::NtkMcMean;
  throw InvalidArgument("unknown kernel kind '" + kind + "' (npk, npk-brute, ntk, ntk-mc)");
}

/// Gram matrix of a scalar-head model's kernel on `points`. Gates are the
/// hard gates of the model's feature network (its own ReLU gates for a DNN).
///
///   npk        closed forms (FC product, CONV rotation sum, RES ensemble)
///   npk-brute  enumerated path features; CONV scaled by d_in^2 to match npk
///   ntk        value-weight NTK at the model's value weights, gates fixed
///   ntk-mc     Monte-Carlo mean of the value-weight NTK over +-sigma draws
inline GramMatrix model_gram(const Model& model, const std::vector<Vec>& points, const std::string& kind,
                             std::size_t mc_samples = 200, std::uint64_t seed = 0,
                             std::uint64_t budget = kDefaultPathBudget) {
  ArchSpec arch = model.arch;
  arch.heads = 1;
  const KernelTag tag = kernel_kind_tag(kind);
  const bool dnn = model.kind == NetKind::DNN;
  const ParamSet& pf = dnn ? model.value : model.feature;
  const FeatureKind fk = dnn ? FeatureKind::Relu : model.feature_kind();
  // The provider only reads gates, so head count is irrelevant to it.
  const GateProvider provider = make_gate_provider(model.arch, pf, fk);
  for (const auto& p : points)
    detail::require(p.size() == arch.d_in, "model_gram: point dimension does not match d_in");

  KernelFn fn;
  switch (tag) {
    case KernelTag::NpkDirect:
      fn = [&](std::span<const double> x, std::span<const double> y) {
        switch (arch.family) {
          case Family::FC: return npk_fc(x, y, provider(x), provider(y));
          case Family::CONV_GAP: return npk_conv_rotsum(arch, x, y, provider);
          case Family::RES: return npk_res_ensemble(arch, x, y, provider(x), provider(y)).total;
        }
        return 0.0;
      };
      break;
    case KernelTag::NpkBrute: {
      detail::check_budget(arch, budget);
      const double scale = arch.family == Family::CONV_GAP ? double(arch.d_in * arch.d_in) : 1.0;
      fn = [&, scale](std::span<const double> x, std::span<const double> y) {
        if (arch.family == Family::CONV_GAP) {
          const ParamSet zero = ParamSet::zeros_like(build_plan(arch));
          return scale * dot(dual_vectors(arch, zero, x, provider(x), budget).npf,
                             dual_vectors(arch, zero, y, provider(y), budget).npf);
        }
        return dot(path_features(arch, x, provider(x), budget), path_features(arch, y, provider(y), budget));
      };
      break;
    }
    case KernelTag::Ntk: {
      const NetPlan plan = build_plan(arch);
      ParamSet pv = model.value;
      // Scalar head: keep the first row of the output layer.
      const std::size_t last = plan.param_shapes.size() - 1;
      ParamTensor head(plan.param_shapes[last]);
      for (std::size_t i = 0; i < head.size(); ++i) head[i] = model.value[last][i];
      pv[last] = head;
      fn = [plan, pv, &provider, &model](std::span<const double> x, std::span<const double> y) {
        return ntk_fixed_gates(plan, pv, provider(x), provider(y), x, y, model.routing);
      };
      break;
    }
    case KernelTag::NtkMcMean:
      fn = [&](std::span<const double> x, std::span<const double> y) {
        return ntk_expectation_mc(arch, provider(x), provider(y), x, y, mc_samples, seed, std::nullopt,
                                  model.routing)
            .mean;
      };
      break;
  }
  return gram(points, fn, tag);
}

}  // namespace dualview
