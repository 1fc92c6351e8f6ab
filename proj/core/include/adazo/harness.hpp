#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adazo/solver.hpp"

namespace adazo {

enum class ExperimentKind {
  sigma_proportionality,
  convergence_det,
  convergence_sto,
  adaptive_vs_vanilla,
  sketch_properties
};

std::string to_string(ExperimentKind k);

struct ObjectiveSpecConfig {
  std::string name;           // "quadratic" | "cosh-sum"
  int dim = 0;
  std::string h_source;       // identity | geometric:R | diag:v,... | file:P
  std::string x0_source = "zeros";
  std::string weights;        // cosh-sum, "v1,v2,..." or single value
  double scale = 1.0;
  std::optional<double> l1_override;
  double nu = 0.0;
  std::optional<double> lhat;  // defaults to scale * ||H||
};

struct ScheduleConfig {
  std::string mode = "derived";  // "derived" | "manual"
  std::optional<double> epsilon;
  std::optional<double> alpha, eta, beta;
};

struct RunConfig {
  long iterations = 0;
  bool with_diagnostics = true;
  double target = 0.0;
  std::string vanilla_eta = "auto";
  long vanilla_iterations = 0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::convergence_det;
  std::string id;
  std::uint64_t seed = 0;
  long trials = 1;
  std::string out_dir;  // optional; CLI/env may override
  ObjectiveSpecConfig objective;
  SketchSpec sketch;
  ScheduleConfig schedule;
  RunConfig run;
  std::filesystem::path source_dir;  // for relative file: references
};

/// Parse and fully validate a config file. Throws ConfigError listing every
/// violation (unknown keys, missing keys, range errors, exclusivity).
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& source_dir);

/// Materialize the configured objective (H resolved, scale and overrides
/// applied) and start point.
Objective build_objective(const ObjectiveSpecConfig& cfg);
Eigen::VectorXd build_x0(const ObjectiveSpecConfig& cfg);
PSDMatrix build_h_matrix(const std::string& source, int dim,
                         const std::filesystem::path& base_dir = {});

/// One flat record of the long-format report: experiment id, seed, row
/// index (iteration or trial), metric name and value. Floats serialize at
/// 17 significant digits so they round-trip exactly.
struct ReportRow {
  std::string experiment;
  std::uint64_t seed = 0;
  long index = 0;
  std::string metric;
  double value = 0.0;
};

std::string render_report(const std::vector<ReportRow>& rows);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<std::string> out_dir;
  std::optional<bool> with_diagnostics;
  int jobs = 1;
};

/// Run the configured experiment; writes trace CSVs, a summary JSON and
/// plot-data files under <out_dir>/<id>/. Returns the artifact directory.
/// Re-running with identical config and seeds reproduces identical bytes.
std::filesystem::path run_experiment(const ExperimentConfig& cfg,
                                     const CliOverrides& overrides = {});

struct FirstHit {
  bool reached = false;
  long t = -1;
  long queries = 0;
};

enum class CompareWinner { a, b, tie };

struct ComparisonRecord {
  FirstHit first_a, first_b;
  double query_ratio = 0.0;  // a/b; +inf sentinel when only b is unreached
  CompareWinner winner = CompareWinner::tie;
};

/// Query-to-target comparison of two runs whose traces carry the diagnostic
/// gradient norm.
ComparisonRecord compare_runs(const RunResult& a, const RunResult& b,
                              double target_grad_norm);

/// Trace-level variant for the CLI (columns t, true_grad_norm, queries).
ComparisonRecord compare_traces(const std::filesystem::path& trace_a,
                                const std::filesystem::path& trace_b,
                                double target_grad_norm);

namespace detail {
/// All-at-once writer: content lands at `path` only on success; partial
/// output stays under `path.partial` and never replaces a completed file.
void write_artifact(const std::filesystem::path& path,
                    const std::string& content);
std::string format_double(double v);  // 17 significant digits
}  // namespace detail

}  // namespace adazo
