#pragma once

#include <string>
#include <vector>

#include "dualview/arch/plan.hpp"
#include "dualview/core/init.hpp"
#include "dualview/core/rng.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

/// Weights of one network, one tensor per weighted layer of its plan.
/// Dense tensors are [out, in]; convolution tensors are [window, in, out].
/// There are no bias terms.
struct ParamSet {
  std::vector<ParamTensor> tensors;

  std::size_t size() const { return tensors.size(); }
  ParamTensor& operator[](std::size_t i) { return tensors[i]; }
  const ParamTensor& operator[](std::size_t i) const { return tensors[i]; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  bool operator==(const ParamSet&) const = default;

  void check_against(const NetPlan& plan) const {
    detail::require(tensors.size() == plan.param_shapes.size(),
                    "ParamSet: expected " + std::to_string(plan.param_shapes.size()) + " tensors, got " +
                        std::to_string(tensors.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i)
      detail::require(tensors[i].shape() == plan.param_shapes[i],
                      "ParamSet: tensor " + std::to_string(i) + " has the wrong shape");
  }

  static ParamSet zeros_like(const NetPlan& plan) {
    ParamSet p;
    for (const auto& s : plan.param_shapes) p.tensors.emplace_back(s);
    return p;
  }

  static ParamSet filled(const NetPlan& plan, double value) {
    ParamSet p;
    for (const auto& s : plan.param_shapes) p.tensors.emplace_back(s, value);
    return p;
  }
};

enum class InitScheme { Bernoulli, Gaussian };

/// Draws every tensor with its own scale (see layer_sigmas).
inline ParamSet init_params(const NetPlan& plan, const std::vector<double>& sigmas, Rng& rng,
                            InitScheme scheme = InitScheme::Bernoulli) {
  detail::require(sigmas.size() == plan.param_shapes.size(), "init_params: one sigma per tensor required");
  ParamSet p;
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    p.tensors.push_back(scheme == InitScheme::Bernoulli ? init_bernoulli(plan.param_shapes[i], sigmas[i], rng)
                                                        : init_gaussian(plan.param_shapes[i], sigmas[i], rng));
  return p;
}

}  // namespace dualview
