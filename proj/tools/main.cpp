// Command-line driver: run experiments from config files, compare runs
// against a gradient-norm target, and certify sketch properties.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adazo/errors.hpp"
#include "adazo/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<std::string> out_dir;
  bool with_diagnostics = false;
  bool without_diagnostics = false;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
  cmd->add_option("--trials", opts.trials,
                  "Trial/seed count (overrides the config)");
  cmd->add_option("--out-dir", opts.out_dir,
                  "Output directory (overrides config and ADAZO_OUT_DIR)");
  cmd->add_option("--jobs", opts.jobs, "Worker threads for independent trials")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--with-diagnostics", opts.with_diagnostics,
                "Force the diagnostic gradient oracle on");
  cmd->add_flag("--no-diagnostics", opts.without_diagnostics,
                "Force the diagnostic gradient oracle off");
}

adazo::CliOverrides to_overrides(const CommonOpts& opts) {
  adazo::CliOverrides ov;
  ov.seed = opts.seed;
  ov.trials = opts.trials;
  ov.out_dir = opts.out_dir;
  ov.jobs = opts.jobs;
  if (opts.with_diagnostics) ov.with_diagnostics = true;
  if (opts.without_diagnostics) ov.with_diagnostics = false;
  return ov;
}

int run_from_config(const std::string& path, const CommonOpts& opts,
                    std::optional<adazo::ExperimentKind> require_kind) {
  adazo::ExperimentConfig cfg;
  try {
    cfg = adazo::parse_config(path);
  } catch (const adazo::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (require_kind && cfg.kind != *require_kind) {
    std::cerr << "config kind is '" << adazo::to_string(cfg.kind)
              << "', expected '" << adazo::to_string(*require_kind) << "'\n";
    return 2;
  }
  try {
    const fs::path dir = adazo::run_experiment(cfg, to_overrides(opts));
    std::cout << "artifacts written to " << dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

fs::path trace_path_from_summary(const fs::path& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw std::runtime_error("cannot open " + summary_path.string());
  json j = json::parse(in);
  const char* keys[] = {"runs", "comparison"};
  for (const char* key : keys) {
    if (j.contains(key) && j[key].is_array() && !j[key].empty()) {
      const auto& run = j[key][0];
      const char* trace_keys[] = {"trace", "trace_adaptive"};
      for (const char* tk : trace_keys) {
        if (run.contains(tk)) {
          return summary_path.parent_path() / run[tk].get<std::string>();
        }
      }
    }
  }
  throw std::runtime_error("summary has no trace reference: " +
                           summary_path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive zeroth-order optimization experiments"};
  app.require_subcommand(1);

  // run <config>
  std::string run_config;
  CommonOpts run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("config", run_config, "Experiment config file")
      ->required();
  add_common(run_cmd, run_opts);

  // compare <summary_a> <summary_b> --target <eps>
  std::string summary_a, summary_b;
  double target = 0.0;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "Query-to-target comparison of two completed runs");
  cmp_cmd->add_option("summary_a", summary_a, "First summary.json")->required();
  cmp_cmd->add_option("summary_b", summary_b, "Second summary.json")
      ->required();
  cmp_cmd->add_option("--target", target, "Gradient-norm target")->required();

  // certify-sketch <config>
  std::string cert_config;
  CommonOpts cert_opts;
  CLI::App* cert_cmd = app.add_subcommand(
      "certify-sketch", "Run the sketch-properties certification suite");
  cert_cmd->add_option("config", cert_config, "Experiment config file")
      ->required();
  add_common(cert_cmd, cert_opts);

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    return run_from_config(run_config, run_opts, std::nullopt);
  }
  if (cert_cmd->parsed()) {
    return run_from_config(cert_config, cert_opts,
                           adazo::ExperimentKind::sketch_properties);
  }
  if (cmp_cmd->parsed()) {
    try {
      const auto rec = adazo::compare_traces(trace_path_from_summary(summary_a),
                                             trace_path_from_summary(summary_b),
                                             target);
      nlohmann::ordered_json out;
      out["target"] = target;
      out["a"] = {{"reached", rec.first_a.reached},
                  {"t", rec.first_a.t},
                  {"queries", rec.first_a.queries}};
      out["b"] = {{"reached", rec.first_b.reached},
                  {"t", rec.first_b.t},
                  {"queries", rec.first_b.queries}};
      out["query_ratio"] = std::isfinite(rec.query_ratio)
                               ? nlohmann::ordered_json(rec.query_ratio)
                               : nlohmann::ordered_json("unreached");
      out["winner"] = rec.winner == adazo::CompareWinner::a
                          ? "a"
                          : (rec.winner == adazo::CompareWinner::b ? "b"
                                                                   : "tie");
      std::cout << out.dump(2) << "\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
