#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/io/json.hpp"
#include "dualview/lab/verify.hpp"

namespace dualview {

struct DataConfig {
  std::string source = "synthetic";  // synthetic | csv | cifar-binary
  SyntheticSpec synthetic{"circles", 2000, 3, 2, 0.15, 1.0, 1.0};
  std::string path;                  // file for csv / cifar-binary
  bool header = false;               // csv header line
  std::size_t classes = 0;           // 0 = infer (csv) or 10 (cifar-binary)
  double test_fraction = 0.2;

  bool operator==(const DataConfig&) const = default;
};

struct KernelConfig {
  std::string kind = "npk";   // npk | npk-brute | ntk | ntk-mc
  std::size_t points = 64;    // first n points of the dataset
  std::string format = "both";  // csv | binary | both
  std::size_t mc_samples = 200;

  bool operator==(const KernelConfig&) const = default;
};

struct ExperimentSpec {
  std::string name = "permutation-sweep";  // permutation-sweep | constant-one | width-sweep
  std::size_t seeds = 5;
  std::vector<std::string> regimes{"DGN_STANDALONE", "DLGN"};  // constant-one
  std::vector<std::size_t> widths{16, 64, 256};                // width-sweep
  std::vector<std::size_t> depths{2, 3};
  std::size_t trials = 40;
  std::size_t mc_samples = 200;

  bool operator==(const ExperimentSpec&) const = default;
};

inline ArchSpec default_training_arch() {
  ArchSpec a = make_fc(3, 4, 16, 1.4142135623730951);
  a.heads = 2;
  return a;
}

inline TrainConfig default_train_config() {
  TrainConfig t;
  t.regime = Regime::DLGN;
  t.epochs = 30;
  t.optimizer.schedule.lr = 3e-3;
  return t;
}

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ArchSpec arch = default_training_arch();
  TrainConfig train = default_train_config();
  DataConfig data;
  VerifyConfig verify;
  KernelConfig kernel;
  ExperimentSpec experiment;
  std::string out = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

inline void to_json(json& j, const DataConfig& d) {
  j = json{{"source", d.source}, {"synthetic", d.synthetic}, {"path", d.path},
           {"header", d.header}, {"classes", d.classes},     {"test_fraction", d.test_fraction}};
}

inline void from_json(const json& j, DataConfig& d) {
  detail::reject_unknown(j, {"source", "synthetic", "path", "header", "classes", "test_fraction"}, "data");
  detail::read_opt(j, "source", d.source);
  detail::read_opt(j, "synthetic", d.synthetic);
  detail::read_opt(j, "path", d.path);
  detail::read_opt(j, "header", d.header);
  detail::read_opt(j, "classes", d.classes);
  detail::read_opt(j, "test_fraction", d.test_fraction);
}

inline void to_json(json& j, const VerifyConfig& v) {
  j = json{{"identity_samples", v.identity_samples},
           {"gate_pairs", v.gate_pairs},
           {"mc_samples", v.mc_samples},
           {"mc_trials", v.mc_trials},
           {"mc_widths", v.mc_widths},
           {"mc_depths", v.mc_depths},
           {"conv_cases", v.conv_cases},
           {"res_cases", v.res_cases},
           {"gradient_configs", v.gradient_configs},
           {"selfgate_inputs", v.selfgate_inputs},
           {"gram_points", v.gram_points},
           {"path_budget", v.path_budget},
           {"sigma_scale", v.sigma_scale},
           {"monte_carlo", v.monte_carlo}};
}

inline void from_json(const json& j, VerifyConfig& v) {
  detail::reject_unknown(j,
                         {"identity_samples", "gate_pairs", "mc_samples", "mc_trials", "mc_widths", "mc_depths",
                          "conv_cases", "res_cases", "gradient_configs", "selfgate_inputs", "gram_points",
                          "path_budget", "sigma_scale", "monte_carlo"},
                         "verify");
  detail::read_opt(j, "identity_samples", v.identity_samples);
  detail::read_opt(j, "gate_pairs", v.gate_pairs);
  detail::read_opt(j, "mc_samples", v.mc_samples);
  detail::read_opt(j, "mc_trials", v.mc_trials);
  detail::read_opt(j, "mc_widths", v.mc_widths);
  detail::read_opt(j, "mc_depths", v.mc_depths);
  detail::read_opt(j, "conv_cases", v.conv_cases);
  detail::read_opt(j, "res_cases", v.res_cases);
  detail::read_opt(j, "gradient_configs", v.gradient_configs);
  detail::read_opt(j, "selfgate_inputs", v.selfgate_inputs);
  detail::read_opt(j, "gram_points", v.gram_points);
  detail::read_opt(j, "path_budget", v.path_budget);
  detail::read_opt(j, "sigma_scale", v.sigma_scale);
  detail::read_opt(j, "monte_carlo", v.monte_carlo);
}

inline void to_json(json& j, const KernelConfig& k) {
  j = json{{"kind", k.kind}, {"points", k.points}, {"format", k.format}, {"mc_samples", k.mc_samples}};
}

inline void from_json(const json& j, KernelConfig& k) {
  detail::reject_unknown(j, {"kind", "points", "format", "mc_samples"}, "kernel");
  detail::read_opt(j, "kind", k.kind);
  detail::read_opt(j, "points", k.points);
  detail::read_opt(j, "format", k.format);
  detail::read_opt(j, "mc_samples", k.mc_samples);
}

inline void to_json(json& j, const ExperimentSpec& e) {
  j = json{{"name", e.name},     {"seeds", e.seeds},   {"regimes", e.regimes},      {"widths", e.widths},
           {"depths", e.depths}, {"trials", e.trials}, {"mc_samples", e.mc_samples}};
}

inline void from_json(const json& j, ExperimentSpec& e) {
  detail::reject_unknown(j, {"name", "seeds", "regimes", "widths", "depths", "trials", "mc_samples"}, "experiment");
  detail::read_opt(j, "name", e.name);
  detail::read_opt(j, "seeds", e.seeds);
  detail::read_opt(j, "regimes", e.regimes);
  detail::read_opt(j, "widths", e.widths);
  detail::read_opt(j, "depths", e.depths);
  detail::read_opt(j, "trials", e.trials);
  detail::read_opt(j, "mc_samples", e.mc_samples);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"seed", c.seed},     {"arch", c.arch},     {"train", c.train},           {"data", c.data},
           {"verify", c.verify}, {"kernel", c.kernel}, {"experiment", c.experiment}, {"out", c.out}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  detail::reject_unknown(j, {"seed", "arch", "train", "data", "verify", "kernel", "experiment", "out"}, "config");
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "arch", c.arch);
  detail::read_opt(j, "train", c.train);
  detail::read_opt(j, "data", c.data);
  detail::read_opt(j, "verify", c.verify);
  detail::read_opt(j, "kernel", c.kernel);
  detail::read_opt(j, "experiment", c.experiment);
  detail::read_opt(j, "out", c.out);
}

inline std::string serialize_config(const ExperimentConfig& c) { return json(c).dump(2) + "\n"; }

/// Parses a config document; missing keys keep their defaults, unknown keys
/// are errors.
inline ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.offset());
  }
}

/// Applies "dotted.key=value" to a config. The key must name an existing
/// field; the value is read as JSON and falls back to a plain string.
inline ExperimentConfig apply_override(const ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw InvalidArgument("override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json root = config;
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw InvalidArgument("override: unknown key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  if (node->is_string() && !value.is_string()) value = raw;
  *node = value;
  try {
    return root.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw InvalidArgument("override '" + key + "': " + e.what());
  }
}

}  // namespace dualview
