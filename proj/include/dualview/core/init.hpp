#pragma once

#include <vector>

#include "dualview/core/error.hpp"
#include "dualview/core/rng.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

/// i.i.d. entries, each +sigma or -sigma with probability 1/2.
inline ParamTensor init_bernoulli(const std::vector<std::size_t>& shape, double sigma, Rng& rng) {
  detail::require(sigma > 0.0, "init_bernoulli: sigma must be positive");
  detail::require(!shape.empty(), "init_bernoulli: empty shape");
  ParamTensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.coin() ? sigma : -sigma;
  return t;
}

/// Zero-mean Gaussian entries with standard deviation sigma.
inline ParamTensor init_gaussian(const std::vector<std::size_t>& shape, double sigma, Rng& rng) {
  detail::require(sigma > 0.0, "init_gaussian: sigma must be positive");
  ParamTensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = sigma * rng.normal();
  return t;
}

}  // namespace dualview
