#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/models.hpp"
#include "dualview/arch/params.hpp"
#include "dualview/arch/spec.hpp"
#include "dualview/core/error.hpp"
#include "dualview/core/parallel.hpp"
#include "dualview/core/rng.hpp"
#include "dualview/data/dataset.hpp"
#include "dualview/train/optim.hpp"

namespace dualview {

enum class Regime { DNN, DGN_FR, DGN_FL, DGN_STANDALONE, DLGN, DLGN_SF };

inline constexpr Regime kAllRegimes[] = {Regime::DNN,  Regime::DGN_FR, Regime::DGN_FL, Regime::DGN_STANDALONE,
                                         Regime::DLGN, Regime::DLGN_SF};

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::DNN: return "DNN";
    case Regime::DGN_FR: return "DGN_FR";
    case Regime::DGN_FL: return "DGN_FL";
    case Regime::DGN_STANDALONE: return "DGN_STANDALONE";
    case Regime::DLGN: return "DLGN";
    case Regime::DLGN_SF: return "DLGN_SF";
  }
  return "?";
}

inline Regime regime_from_string(std::string_view s) {
  for (auto r : kAllRegimes)
    if (to_string(r) == s) return r;
  throw InvalidArgument("unknown regime '" + std::string(s) + "'");
}

inline NetKind net_kind(Regime r) {
  switch (r) {
    case Regime::DNN: return NetKind::DNN;
    case Regime::DLGN: return NetKind::DLGN;
    case Regime::DLGN_SF: return NetKind::DLGN_SF;
    default: return NetKind::DGN;
  }
}

/// Fixed-gate regimes train only the value network behind hard gates.
inline bool fixed_gates(Regime r) { return r == Regime::DGN_FR || r == Regime::DGN_FL; }

inline std::string_view to_string(InitScheme s) { return s == InitScheme::Gaussian ? "gaussian" : "bernoulli"; }

inline InitScheme init_scheme_from_string(std::string_view s) {
  if (s == "bernoulli") return InitScheme::Bernoulli;
  if (s == "gaussian") return InitScheme::Gaussian;
  throw InvalidArgument("unknown init scheme '" + std::string(s) + "'");
}

struct TrainConfig {
  Regime regime = Regime::DNN;
  bool constant_one_input = false;       // value network sees x^v = 1
  std::vector<std::size_t> permutation;  // gate routing; empty = identity
  std::optional<GateMode> gate_mode;     // default: hard for FR/FL, soft otherwise
  OptimizerConfig optimizer;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t pretrain_epochs = 20;  // DGN_FL feature-network pretraining
  std::uint64_t seed = 0;
  double beta = 10.0;
  InitScheme init = InitScheme::Bernoulli;

  bool operator==(const TrainConfig&) const = default;

  GateMode effective_gate_mode() const {
    if (regime == Regime::DNN) return GateMode::Hard;
    if (fixed_gates(regime)) return GateMode::Hard;
    return gate_mode.value_or(GateMode::Soft);
  }

  void validate() const {
    detail::require(epochs >= 1, "TrainConfig: epochs must be >= 1");
    detail::require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    detail::require(beta > 0.0 && std::isfinite(beta), "TrainConfig: beta must be positive");
    if (fixed_gates(regime))
      detail::require(!gate_mode || *gate_mode == GateMode::Hard,
                      "TrainConfig: " + std::string(to_string(regime)) + " uses hard gates");
    if (regime == Regime::DNN)
      detail::require(permutation.empty() && !constant_one_input,
                      "TrainConfig: a DNN has no gate routing or constant-1 input");
  }
};

struct TrainReport {
  Regime regime = Regime::DNN;
  std::uint64_t seed = 0;
  TrainConfig config;
  std::vector<double> loss;            // mean training loss per epoch
  std::vector<double> train_accuracy;  // per epoch, measured after the epoch
  std::vector<double> test_accuracy;   // per epoch; empty without a test set
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double wall_clock_seconds = 0.0;
};

struct TrainResult {
  TrainReport report;
  Model model;
  ParamSet feature_at_value_start;  // feature weights when value training began
};

/// Index of the largest logit (first on ties).
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Fraction of samples whose argmax head equals the label.
inline double evaluate(const Model& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::vector<unsigned char> hit(data.size(), 0);
  parallel_for(data.size(), [&](std::size_t i) { hit[i] = argmax(model.logits(data.inputs[i])) == data.labels[i]; });
  return double(std::accumulate(hit.begin(), hit.end(), std::size_t{0})) / double(data.size());
}

/// The untrained model a run starts from.
inline Model make_model(const TrainConfig& config, ArchSpec arch) {
  config.validate();
  arch.beta = config.beta;
  arch.validate();
  GateRouting routing;
  routing.perm = config.permutation;
  routing.constant_one_input = config.constant_one_input;
  Rng rng(config.seed, 0x1417);
  return Model::create(arch, net_kind(config.regime), config.effective_gate_mode(), routing, rng, config.init);
}

namespace detail {

/// Runs config.epochs (or `epochs`) epochs of minibatch training on `subset`.
inline void run_epochs(Model& model, ParamSubset subset, const TrainConfig& config, std::size_t epochs,
                       const Dataset& train_set, const Dataset* test_set, std::uint64_t stream,
                       TrainReport* report) {
  const std::size_t n = train_set.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_iters = epochs * batches;
  Vec theta = model.flatten(subset);
  Optimizer opt(config.optimizer, theta.size());
  Rng rng(config.seed, stream);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool want_feature = subset != ParamSubset::Value;
  const bool want_value = subset != ParamSubset::Feature;
  std::size_t iter = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * config.batch_size, hi = std::min(n, lo + config.batch_size);
      ParamSet df = want_feature ? ParamSet::zeros_like(model.feature_plan) : ParamSet{};
      ParamSet dv = want_value ? ParamSet::zeros_like(model.value_plan) : ParamSet{};
      const double scale = 1.0 / double(hi - lo);
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t s = order[k];
        const auto pass = model.forward(train_set.inputs[s]);
        LossResult lr = loss_softmax_ce(pass.value.logits, train_set.labels[s]);
        if (!std::isfinite(lr.loss))
          throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                               std::to_string(s));
        epoch_loss += lr.loss;
        for (double& g : lr.grad) g *= scale;
        model.backward(pass, lr.grad, want_feature ? &df : nullptr, want_value ? &dv : nullptr);
      }
      Vec g;
      g.reserve(theta.size());
      for (const auto& seg : model.layout(subset)) {
        auto v = (seg.role == ParamRole::Feature ? df : dv)[seg.tensor].values();
        g.insert(g.end(), v.begin(), v.end());
      }
      try {
        opt.step(theta, g, config.optimizer.schedule.at(iter, total_iters));
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b) + ")");
      }
      model.assign(subset, theta);
      ++iter;
    }
    if (report) {
      report->loss.push_back(epoch_loss / double(n));
      report->train_accuracy.push_back(evaluate(model, train_set));
      if (test_set) report->test_accuracy.push_back(evaluate(model, *test_set));
    }
  }
}

}  // namespace detail

/// Trains `model` (usually from make_model) under the regime of `config`.
inline TrainResult train(const TrainConfig& config, Model model, const Dataset& train_set,
                         const Dataset* test_set = nullptr) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  detail::require(train_set.size() >= 1, "train: empty training set");
  detail::require(train_set.dim() == model.arch.d_in,
                  "train: dataset has d_in " + std::to_string(train_set.dim()) + ", architecture expects " +
                      std::to_string(model.arch.d_in));
  detail::require(train_set.classes == model.arch.heads,
                  "train: dataset has " + std::to_string(train_set.classes) + " classes, architecture has " +
                      std::to_string(model.arch.heads) + " heads");
  detail::require(model.kind == net_kind(config.regime), "train: model kind does not match the regime");
  detail::require(model.mode == config.effective_gate_mode(), "train: model gate mode does not match the regime");
  train_set.validate();
  if (test_set) {
    detail::require(test_set->dim() == model.arch.d_in, "train: test set has the wrong d_in");
    test_set->validate();
  }

  TrainResult result;
  if (config.regime == Regime::DGN_FL) {
    // Pretrain the feature network as a standalone ReLU classifier.
    Model pre;
    pre.arch = model.arch;
    pre.kind = NetKind::DNN;
    pre.value_plan = model.feature_plan;
    pre.value = model.feature;
    detail::run_epochs(pre, ParamSubset::Value, config, config.pretrain_epochs, train_set, nullptr, 0x9e7, nullptr);
    model.feature = pre.value;
  }
  result.feature_at_value_start = model.feature;

  TrainReport& rep = result.report;
  rep.regime = config.regime;
  rep.seed = config.seed;
  rep.config = config;
  const ParamSubset subset =
      config.regime == Regime::DNN || fixed_gates(config.regime) ? ParamSubset::Value : ParamSubset::All;
  detail::run_epochs(model, subset, config, config.epochs, train_set, test_set, 0x7a1, &rep);
  rep.final_train_accuracy = rep.train_accuracy.back();
  rep.final_test_accuracy = rep.test_accuracy.empty() ? 0.0 : rep.test_accuracy.back();
  rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.model = std::move(model);
  return result;
}

inline TrainResult train(const TrainConfig& config, const ArchSpec& arch, const Dataset& train_set,
                         const Dataset* test_set = nullptr) {
  return train(config, make_model(config, arch), train_set, test_set);
}

}  // namespace dualview
