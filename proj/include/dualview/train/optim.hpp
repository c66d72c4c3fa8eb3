#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/core/error.hpp"
#include "dualview/core/tensor.hpp"

namespace dualview {

struct LossResult {
  double loss = 0.0;
  Vec grad;  // d loss / d logits
};

/// Softmax cross-entropy; gradient = softmax - onehot(label).
inline LossResult loss_softmax_ce(std::span<const double> logits, std::size_t label) {
  detail::require(!logits.empty(), "loss_softmax_ce: empty logits");
  detail::require(label < logits.size(), "loss_softmax_ce: label " + std::to_string(label) + " out of range for " +
                                             std::to_string(logits.size()) + " classes");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  LossResult r;
  r.loss = std::log(z) + mx - logits[label];
  r.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) r.grad[k] = std::exp(logits[k] - mx) / z;
  r.grad[label] -= 1.0;
  return r;
}

enum class OptimizerKind { SgdMomentum, Adam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

inline OptimizerKind optimizer_from_string(std::string_view s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::SgdMomentum;
  throw InvalidArgument("unknown optimizer '" + std::string(s) + "'");
}

/// Learning rate as a function of the iteration.
///
/// "constant" uses lr throughout. "piecewise" is the four-phase schedule
/// 0.01 / 0.1 / 0.01 / 0.001 with breakpoints at 400, 32000 and 48000 of
/// 64000 iterations, rescaled to the run's total iteration count.
struct LrSchedule {
  std::string kind = "constant";
  double lr = 3e-4;

  bool operator==(const LrSchedule&) const = default;

  double at(std::size_t iter, std::size_t total_iters) const {
    if (kind == "constant") return lr;
    if (kind == "piecewise") {
      const double frac = total_iters ? double(iter) / double(total_iters) : 0.0;
      if (frac < 400.0 / 64000.0) return 0.01;
      if (frac < 32000.0 / 64000.0) return 0.1;
      if (frac < 48000.0 / 64000.0) return 0.01;
      return 0.001;
    }
    throw InvalidArgument("unknown learning-rate schedule '" + kind + "'");
  }
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  LrSchedule schedule;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const OptimizerConfig&) const = default;
};

/// Optimizer state for one flat parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t n) : config_(std::move(config)), m_(n, 0.0), v_(n, 0.0) {}

  std::size_t steps() const { return t_; }

  /// SGD-momentum: v <- mu v - lr g; theta <- theta + v.
  /// Adam: bias-corrected first/second moments.
  void step(std::span<double> params, std::span<const double> grads, double lr) {
    detail::require(params.size() == m_.size() && grads.size() == m_.size(), "optimizer_step: shape mismatch");
    for (double g : grads)
      if (!std::isfinite(g)) throw NumericalError("optimizer_step: non-finite gradient at step " + std::to_string(t_));
    ++t_;
    if (config_.kind == OptimizerKind::SgdMomentum) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = config_.momentum * m_[i] - lr * grads[i];
        params[i] += m_[i];
      }
      return;
    }
    const double c1 = 1.0 - std::pow(config_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.eps);
    }
  }

 private:
  OptimizerConfig config_;
  Vec m_;
  Vec v_;
  std::size_t t_ = 0;
};

}  // namespace dualview
