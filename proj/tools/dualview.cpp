// dualview: verify, train, kernel and experiment commands.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "dualview/io/config.hpp"
#include "dualview/io/files.hpp"
#include "dualview/lab/experiments.hpp"
#include "dualview/lab/gram_job.hpp"
#include "dualview/lab/verify.hpp"

namespace fs = std::filesystem;
using namespace dualview;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (defaults apply to missing keys)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory (created if missing)");
  cmd->add_option("--override", o.overrides, "dotted key=value, repeatable")->take_all();
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  for (const auto& ov : o.overrides) c = apply_override(c, ov);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  c.train.seed = c.seed;
  return c;
}

Dataset load_data(const ExperimentConfig& c) {
  const DataConfig& d = c.data;
  if (d.source == "synthetic") return generate_synthetic(d.synthetic, c.seed);
  if (d.path.empty()) throw InvalidArgument("data.path is required for source '" + d.source + "'");
  return load_dataset(d.path, d.source, d.header, d.classes);
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
}

// ---------------------------------------------------------------------------

int cmd_verify(const ExperimentConfig& c) {
  const fs::path out(c.out);
  ensure_directory(out);
  const VerifyReport report = run_verify(c.verify, c.seed);
  for (const auto& k : report.checks) {
    const char* status = k.skipped ? "SKIP" : k.passed ? "PASS" : "FAIL";
    std::cout << status << "  " << std::left << std::setw(26) << k.name;
    if (!k.skipped) std::cout << " deviation=" << k.deviation << " tolerance=" << k.tolerance;
    std::cout << "  " << k.detail << "\n";
  }
  json j{{"seed", c.seed}, {"config", c.verify}, {"checks", report.checks}, {"passed", report.all_passed()}};
  write_json(out / "verify.json", j);
  std::cout << (report.all_passed() ? "verify: all checks passed" : "verify: FAILED") << "\n";
  return report.all_passed() ? kExitOk : kExitAssertion;
}

int cmd_train(const ExperimentConfig& c) {
  const fs::path out(c.out);
  ensure_directory(out);
  const Dataset data = load_data(c);
  const auto [tr, te] = train_test_split(data, c.data.test_fraction, c.seed);
  const TrainResult r = train(c.train, c.arch, tr, te.size() ? &te : nullptr);
  json report = r.report;
  report["dataset"] = data.provenance;
  write_json(out / "train_report.json", report);
  json params{{"arch", c.arch}, {"kind", to_string(r.model.kind)}, {"value", r.model.value}};
  if (r.model.kind != NetKind::DNN) params["feature"] = r.model.feature;
  write_json(out / "params.json", params);
  std::cout << to_string(c.train.regime) << " seed=" << c.seed << " epochs=" << c.train.epochs
            << " final_loss=" << r.report.loss.back() << " train_accuracy=" << r.report.final_train_accuracy
            << " test_accuracy=" << r.report.final_test_accuracy << "\n";
  return kExitOk;
}

int cmd_kernel(const ExperimentConfig& c) {
  const fs::path out(c.out);
  ensure_directory(out);
  const Dataset data = load_data(c);
  std::vector<Vec> points(data.inputs.begin(),
                          data.inputs.begin() + std::ptrdiff_t(std::min(c.kernel.points, data.size())));
  TrainConfig tc = c.train;
  ArchSpec arch = c.arch;
  arch.heads = 1;
  const Model model = make_model(tc, arch);
  const GramMatrix g = model_gram(model, points, c.kernel.kind, c.kernel.mc_samples, c.seed, c.verify.path_budget);
  const std::string& fmt = c.kernel.format;
  if (fmt != "csv" && fmt != "binary" && fmt != "both") throw InvalidArgument("kernel.format must be csv, binary or both");
  if (fmt != "binary") write_file(out / "gram.csv", [&](std::ostream& os) { write_gram_csv(os, g); });
  if (fmt != "csv") write_file(out / "gram.npkg", [&](std::ostream& os) { write_gram_binary(os, g); }, true);
  const double min_eig = g.min_eigenvalue();
  std::cout << "kernel=" << to_string(g.tag) << " n=" << g.n << " fingerprint=" << g.fingerprint
            << " min_eig=" << min_eig << " psd=" << (min_eig >= g.psd_floor() ? "yes" : "no") << "\n";
  return kExitOk;
}

json records_json(const std::vector<RunRecord>& records) {
  json arr = json::array();
  for (const auto& r : records)
    arr.push_back({{"label", r.label},
                   {"regime", to_string(r.regime)},
                   {"constant_one_input", r.constant_one_input},
                   {"permutation", r.permutation},
                   {"seed", r.seed},
                   {"train_accuracy", r.train_accuracy},
                   {"test_accuracy", r.test_accuracy},
                   {"wall_clock_seconds", r.wall_clock_seconds}});
  return arr;
}

json summary_json(const std::vector<RunRecord>& records, const fs::path& csv) {
  json arr = json::array();
  write_file(csv, [&](std::ostream& os) {
    os << "label,runs,mean_test_accuracy,stderr\n" << std::setprecision(17);
    for (const auto& [label, s] : summarize(records)) {
      arr.push_back({{"label", label}, {"runs", s.count()}, {"mean_test_accuracy", s.mean()},
                     {"stderr", s.count() > 1 ? s.stderr_of_mean() : 0.0}});
      os << label << "," << s.count() << "," << s.mean() << "," << (s.count() > 1 ? s.stderr_of_mean() : 0.0)
         << "\n";
    }
  });
  return arr;
}

void records_csv(const std::vector<RunRecord>& records, const fs::path& csv) {
  write_file(csv, [&](std::ostream& os) {
    os << "label,regime,constant_one_input,permutation,seed,train_accuracy,test_accuracy\n" << std::setprecision(17);
    for (const auto& r : records)
      os << r.label << "," << to_string(r.regime) << "," << r.constant_one_input << ","
         << permutation_label(r.permutation) << "," << r.seed << "," << r.train_accuracy << "," << r.test_accuracy
         << "\n";
  });
}

int cmd_experiment(const ExperimentConfig& c) {
  const fs::path out(c.out);
  ensure_directory(out);
  const ExperimentSpec& e = c.experiment;
  json result{{"name", e.name}, {"config", c}};
  if (e.name == "permutation-sweep" || e.name == "constant-one") {
    detail::require(c.data.source == "synthetic", "training experiments use synthetic data");
    std::vector<RunSpec> jobs;
    if (e.name == "permutation-sweep") {
      detail::require(c.train.regime != Regime::DNN, "permutation-sweep needs a gated regime");
      jobs = permutation_jobs(c.arch, c.train, e.seeds);
    } else {
      std::vector<Regime> regimes;
      for (const auto& r : e.regimes) regimes.push_back(regime_from_string(r));
      jobs = constant_one_jobs(regimes, c.train, e.seeds);
    }
    const auto records = run_sweep(jobs, c.arch, c.data.synthetic, c.data.test_fraction);
    const std::string stem = e.name == "permutation-sweep" ? "permutation_sweep" : "constant_one";
    result["records"] = records_json(records);
    result["summary"] = summary_json(records, out / (stem + "_summary.csv"));
    records_csv(records, out / (stem + ".csv"));
    for (const auto& s : result["summary"])
      std::cout << std::left << std::setw(28) << s["label"].get<std::string>() << " mean_test_accuracy="
                << s["mean_test_accuracy"].get<double>() << " runs=" << s["runs"].get<std::size_t>() << "\n";
  } else if (e.name == "width-sweep") {
    const auto rows = mc_fc_sweep(e.widths, e.depths, e.trials, e.mc_samples, 1.0, c.seed);
    json arr = json::array();
    for (auto d : e.depths) {
      write_file(out / ("width_sweep_d" + std::to_string(d) + ".csv"), [&](std::ostream& os) {
        os << "width,median_rel_dev,stderr\n" << std::setprecision(17);
        for (const auto& r : rows)
          if (r.depth == d) os << r.width << "," << r.median_rel_dev << "," << r.stderr_rel << "\n";
      });
    }
    for (const auto& r : rows) {
      arr.push_back({{"width", r.width}, {"depth", r.depth}, {"trials", r.trials}, {"within_3se", r.within},
                     {"median_rel_dev", r.median_rel_dev}, {"stderr", r.stderr_rel}});
      std::cout << "depth=" << r.depth << " width=" << r.width << " median_rel_dev=" << r.median_rel_dev
                << " within_3se=" << r.within << "/" << r.trials << "\n";
    }
    result["rows"] = arr;
  } else {
    throw InvalidArgument("unknown experiment '" + e.name + "' (permutation-sweep, constant-one, width-sweep)");
  }
  write_json(out / "experiment.json", result);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dualview: path-space view of ReLU networks"};
  app.require_subcommand(1);
  CommonOptions opts;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const ExperimentConfig&);
  };
  const Command commands[] = {
      {"verify", "run the invariant suite; exit 1 on any failed check", cmd_verify},
      {"train", "train one model and write train_report.json and params.json", cmd_train},
      {"kernel", "write the Gram matrix of a kernel on the dataset", cmd_kernel},
      {"experiment", "run a named experiment bundle", cmd_experiment},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_common(subs.back(), opts);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    const ExperimentConfig config = resolve(opts);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return commands[i].run(config);
  } catch (const NumericalError& e) {
    std::cerr << "dualview: numerical failure: " << e.what() << "\n";
    return kExitAssertion;
  } catch (const std::exception& e) {
    std::cerr << "dualview: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
