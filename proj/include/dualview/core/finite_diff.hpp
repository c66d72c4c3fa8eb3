#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "dualview/core/error.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

/// Central differences of f at theta; the step for coordinate i is
/// step * max(1, |theta_i|).
inline Vec finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> theta, double step) {
  detail::require(step > 0.0 && std::isfinite(step), "finite_diff_grad: step must be positive");
  Vec work(theta.begin(), theta.end());
  Vec grad(theta.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double orig = work[i];
    const double h = step * std::max(1.0, std::abs(orig));
    work[i] = orig + h;
    const double up = f(work);
    work[i] = orig - h;
    const double down = f(work);
    work[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
/// gradient is zero from dividing rounding noise by zero.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  detail::require(a.size() == b.size(), "max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i], floor));
  return worst;
}

}  // namespace dualview
