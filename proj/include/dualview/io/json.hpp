#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

#include "dualview/arch/gates.hpp"
#include "dualview/arch/spec.hpp"
#include "dualview/data/dataset.hpp"
#include "dualview/kernels/invariance.hpp"
#include "dualview/train/optim.hpp"
#include "dualview/train/train.hpp"

namespace dualview {

using nlohmann::json;

namespace detail {
template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw InvalidArgument(std::string(where) + ": unknown key '" + k + "'");
  }
}
}  // namespace detail

inline void to_json(json& j, const ArchSpec& a) {
  j = json{{"family", to_string(a.family)}, {"d_in", a.d_in},         {"depth", a.depth},
           {"width", a.width},              {"conv_layers", a.conv_layers}, {"conv_window", a.conv_window},
           {"fc_layers", a.fc_layers},      {"skips", a.skips},       {"block_depth", a.block_depth},
           {"c_scale", a.c_scale},          {"beta", a.beta},         {"heads", a.heads}};
}

inline void from_json(const json& j, ArchSpec& a) {
  detail::reject_unknown(j,
                         {"family", "d_in", "depth", "width", "conv_layers", "conv_window", "fc_layers", "skips",
                          "block_depth", "c_scale", "beta", "heads"},
                         "arch");
  if (auto it = j.find("family"); it != j.end()) a.family = family_from_string(it->get<std::string>());
  detail::read_opt(j, "d_in", a.d_in);
  detail::read_opt(j, "depth", a.depth);
  detail::read_opt(j, "width", a.width);
  detail::read_opt(j, "conv_layers", a.conv_layers);
  detail::read_opt(j, "conv_window", a.conv_window);
  detail::read_opt(j, "fc_layers", a.fc_layers);
  detail::read_opt(j, "skips", a.skips);
  detail::read_opt(j, "block_depth", a.block_depth);
  detail::read_opt(j, "c_scale", a.c_scale);
  detail::read_opt(j, "beta", a.beta);
  detail::read_opt(j, "heads", a.heads);
}

inline void to_json(json& j, const OptimizerConfig& o) {
  j = json{{"kind", to_string(o.kind)},    {"schedule", o.schedule.kind}, {"lr", o.schedule.lr},
           {"momentum", o.momentum},       {"beta1", o.beta1},            {"beta2", o.beta2},
           {"eps", o.eps}};
}

inline void from_json(const json& j, OptimizerConfig& o) {
  detail::reject_unknown(j, {"kind", "schedule", "lr", "momentum", "beta1", "beta2", "eps"}, "optimizer");
  if (auto it = j.find("kind"); it != j.end()) o.kind = optimizer_from_string(it->get<std::string>());
  detail::read_opt(j, "schedule", o.schedule.kind);
  detail::read_opt(j, "lr", o.schedule.lr);
  detail::read_opt(j, "momentum", o.momentum);
  detail::read_opt(j, "beta1", o.beta1);
  detail::read_opt(j, "beta2", o.beta2);
  detail::read_opt(j, "eps", o.eps);
}

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"regime", to_string(c.regime)},
           {"constant_one_input", c.constant_one_input},
           {"permutation", c.permutation},
           {"gate_mode", c.gate_mode ? std::string(to_string(*c.gate_mode)) : std::string("default")},
           {"optimizer", c.optimizer},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"pretrain_epochs", c.pretrain_epochs},
           {"seed", c.seed},
           {"beta", c.beta},
           {"init", to_string(c.init)}};
}

inline void from_json(const json& j, TrainConfig& c) {
  detail::reject_unknown(j,
                         {"regime", "constant_one_input", "permutation", "gate_mode", "optimizer", "epochs",
                          "batch_size", "pretrain_epochs", "seed", "beta", "init"},
                         "train");
  if (auto it = j.find("regime"); it != j.end()) c.regime = regime_from_string(it->get<std::string>());
  detail::read_opt(j, "constant_one_input", c.constant_one_input);
  detail::read_opt(j, "permutation", c.permutation);
  if (auto it = j.find("gate_mode"); it != j.end()) {
    const auto s = it->get<std::string>();
    c.gate_mode = s == "default" ? std::nullopt : std::optional<GateMode>(gate_mode_from_string(s));
  }
  detail::read_opt(j, "optimizer", c.optimizer);
  detail::read_opt(j, "epochs", c.epochs);
  detail::read_opt(j, "batch_size", c.batch_size);
  detail::read_opt(j, "pretrain_epochs", c.pretrain_epochs);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "beta", c.beta);
  if (auto it = j.find("init"); it != j.end()) c.init = init_scheme_from_string(it->get<std::string>());
}

inline void to_json(json& j, const SyntheticSpec& s) {
  j = json{{"kind", s.kind},   {"n", s.n},         {"d_in", s.d_in},
           {"classes", s.classes}, {"noise", s.noise}, {"separation", s.separation},
           {"offset", s.offset}};
}

inline void from_json(const json& j, SyntheticSpec& s) {
  detail::reject_unknown(j, {"kind", "n", "d_in", "classes", "noise", "separation", "offset"}, "synthetic");
  detail::read_opt(j, "kind", s.kind);
  detail::read_opt(j, "n", s.n);
  detail::read_opt(j, "d_in", s.d_in);
  detail::read_opt(j, "classes", s.classes);
  detail::read_opt(j, "noise", s.noise);
  detail::read_opt(j, "separation", s.separation);
  detail::read_opt(j, "offset", s.offset);
}

inline void to_json(json& j, const TrainReport& r) {
  j = json{{"regime", to_string(r.regime)},
           {"seed", r.seed},
           {"config", r.config},
           {"curves", {{"loss", r.loss}, {"train_accuracy", r.train_accuracy}, {"test_accuracy", r.test_accuracy}}},
           {"final", {{"train_accuracy", r.final_train_accuracy}, {"test_accuracy", r.final_test_accuracy}}},
           {"wall_clock_seconds", r.wall_clock_seconds}};
}

inline void to_json(json& j, const CheckResult& c) {
  j = json{{"name", c.name},         {"deviation", c.deviation}, {"tolerance", c.tolerance},
           {"passed", c.passed},     {"skipped", c.skipped},     {"detail", c.detail}};
}

inline void to_json(json& j, const ParamTensor& t) {
  const auto v = t.values();
  j = json{{"shape", t.shape()}, {"values", std::vector<double>(v.begin(), v.end())}};
}

inline void to_json(json& j, const ParamSet& p) { j = p.tensors; }

}  // namespace dualview
