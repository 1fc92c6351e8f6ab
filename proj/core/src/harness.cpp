#include "adazo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "adazo/errors.hpp"

namespace adazo {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace detail {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_artifact(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path partial = path.string() + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + partial.string());
    out << content;
    if (!out.good()) throw std::runtime_error("write failed: " + partial.string());
  }
  fs::rename(partial, path);
}

namespace {

void parallel_for(long n, int jobs, const std::function<void(long)>& body) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n < 2) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          body(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace
}  // namespace detail

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::sigma_proportionality: return "sigma-proportionality";
    case ExperimentKind::convergence_det: return "convergence-det";
    case ExperimentKind::convergence_sto: return "convergence-sto";
    case ExperimentKind::adaptive_vs_vanilla: return "adaptive-vs-vanilla";
    case ExperimentKind::sketch_properties: return "sketch-properties";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

struct KeyValue {
  std::map<std::string, std::string> values;
  std::vector<std::string> errors;

  bool has(const std::string& k) const { return values.count(k) > 0; }

  std::optional<std::string> get(const std::string& k) const {
    auto it = values.find(k);
    if (it == values.end()) return std::nullopt;
    return it->second;
  }

  template <typename T>
  std::optional<T> get_num(const std::string& k) {
    auto v = get(k);
    if (!v) return std::nullopt;
    std::stringstream ss(*v);
    T out;
    std::string rest;
    if (!(ss >> out) || (ss >> rest)) {
      errors.push_back("key '" + k + "': cannot parse '" + *v + "'");
      return std::nullopt;
    }
    return out;
  }

  std::optional<bool> get_bool(const std::string& k) {
    auto v = get(k);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    errors.push_back("key '" + k + "': expected a boolean, got '" + *v + "'");
    return std::nullopt;
  }
};

KeyValue tokenize_config(const std::string& text,
                         std::vector<std::string>& errors) {
  KeyValue kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) +
                       ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      errors.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    if (kv.values.count(key)) {
      errors.push_back("key '" + key + "' appears more than once");
      continue;
    }
    kv.values[key] = value;
  }
  return kv;
}

const std::set<std::string> kCommonKeys = {
    "kind", "id", "seed", "trials", "out_dir",
    "objective.name", "objective.dim", "objective.h", "objective.x0",
    "objective.weights", "objective.scale", "objective.l1",
    "sketch.family", "sketch.cols", "sketch.rank", "sketch.delta",
    "sketch.sparsity"};

std::set<std::string> allowed_keys(ExperimentKind kind) {
  std::set<std::string> keys = kCommonKeys;
  auto add = [&keys](std::initializer_list<const char*> more) {
    for (const char* k : more) keys.insert(k);
  };
  switch (kind) {
    case ExperimentKind::sigma_proportionality:
      add({"schedule.mode", "schedule.epsilon", "schedule.alpha",
           "run.iterations"});
      break;
    case ExperimentKind::convergence_det:
      add({"schedule.mode", "schedule.epsilon", "schedule.alpha",
           "schedule.eta", "run.iterations", "run.with_diagnostics",
           "run.target"});
      break;
    case ExperimentKind::convergence_sto:
      add({"objective.nu", "objective.lhat", "schedule.mode",
           "schedule.epsilon", "schedule.alpha", "schedule.eta",
           "schedule.beta", "run.iterations", "run.with_diagnostics",
           "run.target"});
      break;
    case ExperimentKind::adaptive_vs_vanilla:
      add({"schedule.mode", "schedule.epsilon", "run.iterations",
           "run.target", "run.vanilla_eta", "run.vanilla_iterations"});
      break;
    case ExperimentKind::sketch_properties:
      add({"objective.nu", "run.iterations"});
      break;
  }
  return keys;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const fs::path& source_dir) {
  std::vector<std::string> errors;
  KeyValue kv = tokenize_config(text, errors);

  ExperimentConfig cfg;
  cfg.source_dir = source_dir;

  const auto kind_str = kv.get("kind");
  if (!kind_str) {
    errors.push_back("missing required key 'kind'");
  } else if (*kind_str == "sigma-proportionality") {
    cfg.kind = ExperimentKind::sigma_proportionality;
  } else if (*kind_str == "convergence-det") {
    cfg.kind = ExperimentKind::convergence_det;
  } else if (*kind_str == "convergence-sto") {
    cfg.kind = ExperimentKind::convergence_sto;
  } else if (*kind_str == "adaptive-vs-vanilla") {
    cfg.kind = ExperimentKind::adaptive_vs_vanilla;
  } else if (*kind_str == "sketch-properties") {
    cfg.kind = ExperimentKind::sketch_properties;
  } else {
    errors.push_back("key 'kind': unknown experiment kind '" + *kind_str +
                     "'");
  }

  if (kind_str) {
    const auto allowed = allowed_keys(cfg.kind);
    for (const auto& [key, value] : kv.values) {
      if (!allowed.count(key)) {
        errors.push_back("unknown key '" + key + "' for kind '" + *kind_str +
                         "'");
      }
    }
  }

  cfg.id = kv.get("id").value_or(kind_str.value_or("experiment"));
  cfg.seed = kv.get_num<std::uint64_t>("seed").value_or(0);
  cfg.trials = kv.get_num<long>("trials").value_or(1);
  if (cfg.trials < 1) errors.push_back("key 'trials': must be >= 1");
  cfg.out_dir = kv.get("out_dir").value_or("");

  // Objective block.
  cfg.objective.name = kv.get("objective.name").value_or("");
  if (cfg.objective.name.empty()) {
    errors.push_back("missing required key 'objective.name'");
  } else if (cfg.objective.name != "quadratic" &&
             cfg.objective.name != "cosh-sum") {
    errors.push_back("key 'objective.name': expected 'quadratic' or "
                     "'cosh-sum', got '" + cfg.objective.name + "'");
  }
  const auto dim = kv.get_num<int>("objective.dim");
  if (!dim) {
    errors.push_back("missing required key 'objective.dim'");
  } else if (*dim < 1) {
    errors.push_back("key 'objective.dim': must be >= 1");
  } else {
    cfg.objective.dim = *dim;
  }
  cfg.objective.h_source = kv.get("objective.h").value_or("identity");
  cfg.objective.x0_source = kv.get("objective.x0").value_or("zeros");
  cfg.objective.weights = kv.get("objective.weights").value_or("");
  cfg.objective.scale = kv.get_num<double>("objective.scale").value_or(1.0);
  if (cfg.objective.scale <= 0.0) {
    errors.push_back("key 'objective.scale': must be > 0");
  }
  cfg.objective.l1_override = kv.get_num<double>("objective.l1");
  cfg.objective.nu = kv.get_num<double>("objective.nu").value_or(0.0);
  if (cfg.objective.nu < 0.0) errors.push_back("key 'objective.nu': must be >= 0");
  cfg.objective.lhat = kv.get_num<double>("objective.lhat");

  // Sketch block.
  const auto family = kv.get("sketch.family").value_or("gaussian");
  if (family == "gaussian") {
    cfg.sketch.family.variant = SketchVariant::gaussian;
  } else if (family == "rademacher") {
    cfg.sketch.family.variant = SketchVariant::rademacher;
  } else if (family == "srht") {
    cfg.sketch.family.variant = SketchVariant::srht;
  } else if (family == "sparse-embedding") {
    cfg.sketch.family.variant = SketchVariant::sparse_embedding;
  } else {
    errors.push_back("key 'sketch.family': unknown family '" + family + "'");
  }
  cfg.sketch.dim = cfg.objective.dim;
  cfg.sketch.num_cols = kv.get_num<int>("sketch.cols").value_or(16);
  if (cfg.sketch.num_cols < 2) {
    errors.push_back("key 'sketch.cols': ell must be >= 2 (the sample "
                     "standard deviation needs ell - 1 >= 1)");
  }
  cfg.sketch.target_rank = kv.get_num<int>("sketch.rank").value_or(4);
  if (cfg.sketch.target_rank < 4) {
    errors.push_back("key 'sketch.rank': the theory constants require k >= 4");
  }
  cfg.sketch.failure_prob = kv.get_num<double>("sketch.delta").value_or(0.1);
  if (cfg.sketch.failure_prob <= 0.0 || cfg.sketch.failure_prob >= 1.0) {
    errors.push_back("key 'sketch.delta': must lie in (0, 1)");
  }
  cfg.sketch.family.sparsity_s = kv.get_num<int>("sketch.sparsity").value_or(1);
  if (cfg.sketch.family.variant == SketchVariant::sparse_embedding &&
      cfg.sketch.family.sparsity_s > cfg.sketch.num_cols) {
    errors.push_back("key 'sketch.sparsity': must be <= sketch.cols");
  }
  cfg.sketch.seed = cfg.seed;

  // Schedule block.
  cfg.schedule.mode = kv.get("schedule.mode").value_or("derived");
  if (cfg.schedule.mode != "derived" && cfg.schedule.mode != "manual") {
    errors.push_back("key 'schedule.mode': expected 'derived' or 'manual'");
  }
  cfg.schedule.epsilon = kv.get_num<double>("schedule.epsilon");
  cfg.schedule.alpha = kv.get_num<double>("schedule.alpha");
  cfg.schedule.eta = kv.get_num<double>("schedule.eta");
  cfg.schedule.beta = kv.get_num<double>("schedule.beta");
  if (cfg.schedule.mode == "derived") {
    std::vector<std::string> clash;
    if (cfg.schedule.alpha) clash.push_back("schedule.alpha");
    if (cfg.schedule.eta) clash.push_back("schedule.eta");
    if (cfg.schedule.beta) clash.push_back("schedule.beta");
    if (!clash.empty()) {
      std::string msg =
          "derived-schedule mode excludes explicit overrides; remove "
          "'schedule.mode = derived' or the key(s)";
      for (const auto& c : clash) msg += " '" + c + "'";
      errors.push_back(msg);
    }
  } else if (cfg.schedule.mode == "manual") {
    if (cfg.schedule.epsilon) {
      errors.push_back(
          "manual-schedule mode excludes 'schedule.epsilon'; remove "
          "'schedule.mode = manual' or 'schedule.epsilon'");
    }
    if (!cfg.schedule.alpha) {
      errors.push_back("manual-schedule mode requires 'schedule.alpha'");
    }
  }

  // Run block.
  cfg.run.iterations = kv.get_num<long>("run.iterations").value_or(0);
  cfg.run.with_diagnostics =
      kv.get_bool("run.with_diagnostics").value_or(true);
  cfg.run.target = kv.get_num<double>("run.target").value_or(0.0);
  cfg.run.vanilla_eta = kv.get("run.vanilla_eta").value_or("auto");
  cfg.run.vanilla_iterations =
      kv.get_num<long>("run.vanilla_iterations").value_or(0);

  switch (cfg.kind) {
    case ExperimentKind::convergence_det:
    case ExperimentKind::convergence_sto:
      if (cfg.run.iterations < 1) {
        errors.push_back("missing or invalid 'run.iterations' (need >= 1)");
      }
      if (cfg.schedule.mode == "derived" && !cfg.schedule.epsilon) {
        errors.push_back(
            "derived-schedule mode requires 'schedule.epsilon'");
      }
      break;
    case ExperimentKind::adaptive_vs_vanilla:
      if (cfg.run.iterations < 1) {
        errors.push_back("missing or invalid 'run.iterations' (need >= 1)");
      }
      if (cfg.run.target <= 0.0) {
        errors.push_back("adaptive-vs-vanilla requires 'run.target' > 0");
      }
      break;
    case ExperimentKind::sigma_proportionality:
      if (cfg.schedule.mode == "derived" && !cfg.schedule.epsilon) {
        errors.push_back("derived-schedule mode requires 'schedule.epsilon'");
      }
      break;
    case ExperimentKind::sketch_properties:
      break;
  }
  if (cfg.kind == ExperimentKind::convergence_sto) {
    if (cfg.objective.nu <= 0.0) {
      errors.push_back("convergence-sto requires 'objective.nu' > 0");
    }
    const double l1 = cfg.objective.l1_override.value_or(
        cfg.objective.name == "cosh-sum" ? 1.0 : 0.0);
    if (cfg.schedule.mode == "derived" && l1 <= 0.0) {
      errors.push_back(
          "convergence-sto with a derived schedule requires L1 > 0 (set "
          "'objective.l1')");
    }
  }

  for (const auto& e : kv.errors) errors.push_back(e);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

ExperimentConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError({"cannot open config file: " + path.string()});
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Objective materialization
// ---------------------------------------------------------------------------

PSDMatrix build_h_matrix(const std::string& source, int dim,
                         const fs::path& base_dir) {
  if (source == "identity" || source.empty()) {
    return PSDMatrix::identity(dim);
  }
  if (source.rfind("geometric:", 0) == 0) {
    const double ratio = std::stod(source.substr(10));
    Eigen::VectorXd lam(dim);
    double v = 1.0;
    for (int i = 0; i < dim; ++i) {
      lam[i] = v;
      v *= ratio;
    }
    return PSDMatrix::diagonal(lam);
  }
  if (source.rfind("diag:", 0) == 0) {
    const auto parts = split(source.substr(5), ',');
    if (static_cast<int>(parts.size()) != dim) {
      throw std::invalid_argument("objective.h diag: expected " +
                                  std::to_string(dim) + " values");
    }
    Eigen::VectorXd lam(dim);
    for (int i = 0; i < dim; ++i) lam[i] = std::stod(parts[static_cast<std::size_t>(i)]);
    return PSDMatrix::diagonal(lam);
  }
  if (source.rfind("file:", 0) == 0) {
    fs::path p = source.substr(5);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) throw std::invalid_argument("objective.h: cannot open " + p.string());
    Eigen::MatrixXd h(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        if (!(in >> h(i, j))) {
          throw std::invalid_argument("objective.h: matrix file too short");
        }
      }
    }
    return PSDMatrix::dense(h);
  }
  throw std::invalid_argument("objective.h: unrecognized source '" + source +
                              "'");
}

Eigen::VectorXd build_x0(const ObjectiveSpecConfig& cfg) {
  const int d = cfg.dim;
  const std::string& s = cfg.x0_source;
  if (s == "zeros") return Eigen::VectorXd::Zero(d);
  if (s == "ones") return Eigen::VectorXd::Ones(d);
  if (s.rfind("value:", 0) == 0) {
    return Eigen::VectorXd::Constant(d, std::stod(s.substr(6)));
  }
  if (s.rfind("unit:", 0) == 0) {
    const auto parts = split(s.substr(5), ':');
    if (parts.size() != 2) {
      throw std::invalid_argument("objective.x0 unit: expected unit:INDEX:VALUE");
    }
    const int idx = std::stoi(parts[0]);
    if (idx < 0 || idx >= d) throw std::invalid_argument("objective.x0 unit: index out of range");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    x[idx] = std::stod(parts[1]);
    return x;
  }
  if (s.rfind("list:", 0) == 0) {
    const auto parts = split(s.substr(5), ',');
    if (static_cast<int>(parts.size()) != d) {
      throw std::invalid_argument("objective.x0 list: expected " +
                                  std::to_string(d) + " values");
    }
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = std::stod(parts[static_cast<std::size_t>(i)]);
    return x;
  }
  throw std::invalid_argument("objective.x0: unrecognized source '" + s + "'");
}

Objective build_objective(const ObjectiveSpecConfig& cfg) {
  Objective obj;
  if (cfg.name == "quadratic") {
    const PSDMatrix a = build_h_matrix(cfg.h_source, cfg.dim);
    obj = make_quadratic(a, Eigen::VectorXd::Zero(cfg.dim));
  } else if (cfg.name == "cosh-sum") {
    Eigen::VectorXd w;
    if (cfg.weights.empty()) {
      w = Eigen::VectorXd::Ones(cfg.dim);
    } else {
      const auto parts = split(cfg.weights, ',');
      if (parts.size() == 1) {
        w = Eigen::VectorXd::Constant(cfg.dim, std::stod(parts[0]));
      } else {
        if (static_cast<int>(parts.size()) != cfg.dim) {
          throw std::invalid_argument("objective.weights: expected " +
                                      std::to_string(cfg.dim) + " values");
        }
        w.resize(cfg.dim);
        for (int i = 0; i < cfg.dim; ++i) w[i] = std::stod(parts[static_cast<std::size_t>(i)]);
      }
    }
    obj = make_cosh_sum(std::move(w));
  } else {
    throw std::invalid_argument("unknown objective '" + cfg.name + "'");
  }
  if (cfg.scale != 1.0) obj = scale_objective(obj, cfg.scale);
  if (cfg.l1_override) obj.l1 = *cfg.l1_override;
  return obj;
}

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

namespace {

constexpr double kBandLo = 0.125;  // 1/8
constexpr double kBandHi = 6.5;    // 13/2

std::string trace_csv(const RunResult& run, int l, bool sto_events = false) {
  std::string out =
      "t,f,grad_norm,sigma,step_norm,queries,queries_paper,sigma_floored,"
      "e1,e2,e3,e4";
  if (sto_events) out += ",eh1,eh2,eh3,eh4";
  out += '\n';
  const auto flag = [](const std::optional<Inequality>& ineq, bool holds) {
    return ineq ? (holds ? "1" : "0") : "nan";
  };
  for (const auto& row : run.trace) {
    out += std::to_string(row.t);
    out += ',';
    out += detail::format_double(row.f_value);
    out += ',';
    out += detail::format_double(row.true_grad_norm);
    out += ',';
    out += detail::format_double(row.sigma);
    out += ',';
    out += detail::format_double(row.step_norm);
    out += ',';
    out += std::to_string(row.queries_so_far);
    out += ',';
    out += std::to_string((row.t + 1) * static_cast<long>(l));
    out += ',';
    out += row.sigma_floored ? '1' : '0';
    const EventFlags* ev = row.events ? &*row.events : nullptr;
    out += ',';
    out += ev ? flag(ev->e1, ev->e1 && ev->e1->holds) : "nan";
    out += ',';
    out += ev ? flag(ev->e2_lower, ev->e2_lower && ev->e2()) : "nan";
    out += ',';
    out += ev ? flag(ev->e3, ev->e3 && ev->e3->holds) : "nan";
    out += ',';
    out += ev ? flag(ev->e4, ev->e4 && ev->e4->holds) : "nan";
    if (sto_events) {
      out += ',';
      out += ev ? flag(ev->eh1, ev->eh1 && ev->eh1->holds) : "nan";
      out += ',';
      out += ev ? flag(ev->eh2_lower, ev->eh2_lower && ev->eh2()) : "nan";
      out += ',';
      out += ev ? flag(ev->eh3, ev->eh3 && ev->eh3->holds) : "nan";
      out += ',';
      out += ev ? flag(ev->eh4, ev->eh4 && ev->eh4->holds) : "nan";
    }
    out += '\n';
  }
  return out;
}

/// Per-event hold rates across all trace rows carrying flags.
ordered_json trace_event_frequencies(const std::vector<RunResult>& runs) {
  struct Counter {
    const char* name;
    long ok = 0, n = 0;
  };
  Counter counters[8] = {{"E1"}, {"E2"}, {"E3"}, {"E4"},
                         {"Eh1"}, {"Eh2"}, {"Eh3"}, {"Eh4"}};
  for (const auto& run : runs) {
    for (const auto& row : run.trace) {
      if (!row.events) continue;
      const EventFlags& f = *row.events;
      const auto tally = [](Counter& c, bool present, bool holds) {
        if (present) {
          ++c.n;
          if (holds) ++c.ok;
        }
      };
      tally(counters[0], f.e1.has_value(), f.e1 && f.e1->holds);
      tally(counters[1], f.e2_lower.has_value(), f.e2_lower && f.e2());
      tally(counters[2], f.e3.has_value(), f.e3 && f.e3->holds);
      tally(counters[3], f.e4.has_value(), f.e4 && f.e4->holds);
      tally(counters[4], f.eh1.has_value(), f.eh1 && f.eh1->holds);
      tally(counters[5], f.eh2_lower.has_value(), f.eh2_lower && f.eh2());
      tally(counters[6], f.eh3.has_value(), f.eh3 && f.eh3->holds);
      tally(counters[7], f.eh4.has_value(), f.eh4 && f.eh4->holds);
    }
  }
  ordered_json out = ordered_json::array();
  for (const auto& c : counters) {
    if (c.n == 0) continue;
    out.push_back({{"event", c.name},
                   {"iterations", c.n},
                   {"holds", c.ok},
                   {"rate", static_cast<double>(c.ok) / c.n}});
  }
  return out;
}

ordered_json schedule_json(const Schedule& s) {
  ordered_json j;
  j["alpha"] = s.alpha;
  j["eta"] = s.eta;
  j["beta"] = s.beta;
  j["iterations"] = s.iterations;
  j["ell"] = s.num_cols;
  j["k"] = s.target_rank;
  j["provenance"] = {{"alpha", s.provenance_alpha},
                     {"eta", s.provenance_eta},
                     {"beta", s.provenance_beta}};
  j["constants"] = {{"zeta1", s.constants.zeta1},
                    {"zeta2", s.constants.zeta2},
                    {"hzeta1", s.constants.hzeta1},
                    {"h_norm", s.constants.h_norm},
                    {"h_trace", s.constants.h_trace}};
  return j;
}

ordered_json run_json(const RunResult& r, std::uint64_t seed,
                      const std::string& trace_file, int l) {
  ordered_json j;
  j["seed"] = seed;
  j["trace"] = trace_file;
  if (std::isfinite(r.min_grad_norm)) {
    j["min_grad_norm"] = r.min_grad_norm;
    j["argmin_t"] = r.argmin_t;
  } else {
    j["min_grad_norm"] = nullptr;
    j["argmin_t"] = nullptr;
  }
  j["queries_raw"] = r.total_queries;
  j["queries_paper"] =
      static_cast<long>(r.trace.size()) * static_cast<long>(l);
  j["terminated"] = to_string(r.reason);
  j["max_dist_x0"] = r.max_dist_x0;
  j["max_hdist_x0"] = r.max_hdist_x0;
  j["hnorm_step_violations"] = r.hnorm_step_violations;
  return j;
}

Schedule resolve_schedule(const ExperimentConfig& cfg, const Objective& obj,
                          long T) {
  if (cfg.schedule.mode == "manual") {
    return manual_schedule(cfg.schedule.alpha.value(),
                           cfg.schedule.eta.value_or(0.0),
                           cfg.schedule.beta.value_or(0.0), T,
                           cfg.sketch.num_cols, cfg.sketch.target_rank);
  }
  return derive_det_schedule(obj, cfg.schedule.epsilon.value(), T,
                             cfg.sketch.num_cols, cfg.sketch.target_rank);
}

Schedule resolve_schedule_sto(const ExperimentConfig& cfg,
                              const StochasticObjective& sobj, long T) {
  if (cfg.schedule.mode == "manual") {
    return manual_schedule(cfg.schedule.alpha.value(),
                           cfg.schedule.eta.value_or(0.0),
                           cfg.schedule.beta.value_or(0.0), T,
                           cfg.sketch.num_cols, cfg.sketch.target_rank);
  }
  return derive_sto_schedule(sobj, T, cfg.sketch.num_cols,
                             cfg.sketch.target_rank);
}

void write_convergence_plot(const fs::path& dir,
                            const std::vector<RunResult>& runs) {
  std::size_t rows = 0;
  for (const auto& r : runs) rows = std::max(rows, r.trace.size());
  std::string out = "t,mean_f,mean_grad_norm,mean_sigma\n";
  for (std::size_t t = 0; t < rows; ++t) {
    double f = 0.0, g = 0.0, s = 0.0;
    long n = 0;
    for (const auto& r : runs) {
      if (t < r.trace.size()) {
        f += r.trace[t].f_value;
        g += r.trace[t].true_grad_norm;
        s += r.trace[t].sigma;
        ++n;
      }
    }
    out += std::to_string(t) + ',' + detail::format_double(f / n) + ',' +
           detail::format_double(g / n) + ',' + detail::format_double(s / n) +
           '\n';
  }
  detail::write_artifact(dir / "plot_convergence.csv", out);
}

void report_run_rows(std::vector<ReportRow>& report, const std::string& id,
                     std::uint64_t seed, long index, const RunResult& r,
                     int l) {
  if (std::isfinite(r.min_grad_norm)) {
    report.push_back({id, seed, index, "min_grad_norm", r.min_grad_norm});
    report.push_back(
        {id, seed, index, "argmin_t", static_cast<double>(r.argmin_t)});
  }
  report.push_back({id, seed, index, "queries_raw",
                    static_cast<double>(r.total_queries)});
  report.push_back(
      {id, seed, index, "queries_paper",
       static_cast<double>(static_cast<long>(r.trace.size()) * l)});
}

fs::path resolve_out_dir(const ExperimentConfig& cfg,
                         const CliOverrides& overrides) {
  if (overrides.out_dir) return *overrides.out_dir;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("ADAZO_OUT_DIR")) return env;
  return ".";
}

void run_convergence(const ExperimentConfig& cfg, const CliOverrides& ov,
                     const fs::path& dir, ordered_json& summary,
                     std::vector<ReportRow>& report) {
  const Objective obj = build_objective(cfg.objective);
  const Eigen::VectorXd x0 = build_x0(cfg.objective);
  const long trials = ov.trials.value_or(cfg.trials);
  const std::uint64_t seed0 = ov.seed.value_or(cfg.seed);
  const bool sto = cfg.kind == ExperimentKind::convergence_sto;

  StochasticObjective sobj;
  Schedule sched;
  if (sto) {
    const double lhat = cfg.objective.lhat.value_or(
        cfg.objective.scale * obj.H.spectral_norm());
    sobj = make_bounded_noise(obj, cfg.objective.nu, lhat);
    sched = resolve_schedule_sto(cfg, sobj, cfg.run.iterations);
  } else {
    sched = resolve_schedule(cfg, obj, cfg.run.iterations);
  }

  SolverOptions options;
  options.with_diagnostics = cfg.run.with_diagnostics && obj.has_grad();
  options.check_events = options.with_diagnostics;
  options.target_grad_norm = cfg.run.target;

  std::vector<RunResult> runs(static_cast<std::size_t>(trials));
  detail::parallel_for(trials, ov.jobs, [&](long i) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
    SketchSpec spec = cfg.sketch;
    spec.seed = seed;
    runs[static_cast<std::size_t>(i)] =
        sto ? run_adaptive_sto(sobj, sched, spec, x0, seed, options)
            : run_adaptive_det(obj, sched, spec, x0, seed, options);
  });

  summary["schedule"] = schedule_json(sched);
  ordered_json jruns = ordered_json::array();
  double mean_min = 0.0;
  long with_min = 0;
  for (long i = 0; i < trials; ++i) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
    const std::string trace_file = "trace_seed" + std::to_string(seed) + ".csv";
    const auto& r = runs[static_cast<std::size_t>(i)];
    detail::write_artifact(dir / trace_file,
                           trace_csv(r, cfg.sketch.num_cols, sto));
    jruns.push_back(run_json(r, seed, trace_file, cfg.sketch.num_cols));
    report_run_rows(report, cfg.id, seed, i, r, cfg.sketch.num_cols);
    if (std::isfinite(r.min_grad_norm)) {
      mean_min += r.min_grad_norm;
      ++with_min;
    }
  }
  summary["runs"] = jruns;
  ordered_json agg;
  if (with_min > 0) agg["mean_min_grad_norm"] = mean_min / with_min;
  agg["queries_raw_per_run"] = cfg.run.iterations * (cfg.sketch.num_cols + 1);
  agg["queries_paper_per_run"] = cfg.run.iterations * cfg.sketch.num_cols;
  summary["aggregate"] = agg;
  if (sto) {
    // Region bookkeeping for the bounded-Hessian assumption: the nominal
    // radius, the iterate excursions in both norms (per run above), and
    // the extra reach of a probe, 2 alpha sqrt(tr H).
    const double radius =
        obj.l1 > 0.0
            ? 3.0 * std::sqrt(static_cast<double>(cfg.run.iterations)) /
                  (350.0 * obj.l1 * std::sqrt(sched.constants.zeta2))
            : std::numeric_limits<double>::infinity();
    double worst_euclid = 0.0, worst_h = 0.0;
    for (const auto& r : runs) {
      worst_euclid = std::max(worst_euclid, r.max_dist_x0);
      worst_h = std::max(worst_h, r.max_hdist_x0);
    }
    summary["k_region"] = {
        {"radius", radius},
        {"max_dist_euclidean", worst_euclid},
        {"max_dist_hnorm", worst_h},
        {"euclidean_within", worst_euclid <= radius},
        {"hnorm_within", worst_h <= radius},
        {"probe_slack", 2.0 * sched.alpha * std::sqrt(obj.H.trace())}};
  }
  const ordered_json freqs = trace_event_frequencies(runs);
  if (!freqs.empty()) summary["event_frequencies"] = freqs;
  write_convergence_plot(dir, runs);
}

void run_sigma_proportionality(const ExperimentConfig& cfg,
                               const CliOverrides& ov, const fs::path& dir,
                               ordered_json& summary,
                               std::vector<ReportRow>& report) {
  const Objective obj = build_objective(cfg.objective);
  const Eigen::VectorXd x = build_x0(cfg.objective);
  const long trials = ov.trials.value_or(cfg.trials);
  const std::uint64_t seed0 = ov.seed.value_or(cfg.seed);
  const long T = cfg.run.iterations > 0 ? cfg.run.iterations : 1;
  Schedule sched = resolve_schedule(cfg, obj, T);
  const double grad_norm = obj.grad(x).norm();
  if (grad_norm <= 0.0) {
    throw std::invalid_argument(
        "sigma-proportionality: the anchor point has zero gradient");
  }

  std::vector<double> ratios(static_cast<std::size_t>(trials));
  detail::parallel_for(trials, ov.jobs, [&](long i) {
    RngStream rng = RngStream::derive(seed0, stream_slot::kTrial,
                                      static_cast<std::uint64_t>(i));
    const SketchMatrix S = build_sketch(cfg.sketch, rng);
    const GradientEstimate est = estimate(obj, x, sched.alpha, S);
    ratios[static_cast<std::size_t>(i)] =
        sigma_ratio(est, grad_norm, sched.alpha, cfg.sketch.num_cols);
  });

  long in_band = 0;
  std::string csv = "trial,ratio,in_band\n";
  for (long i = 0; i < trials; ++i) {
    const double r = ratios[static_cast<std::size_t>(i)];
    const bool ok = r >= kBandLo && r <= kBandHi;
    if (ok) ++in_band;
    csv += std::to_string(i) + ',' + detail::format_double(r) + ',' +
           (ok ? "1" : "0") + '\n';
    report.push_back({cfg.id, seed0, i, "sigma_ratio", r});
  }
  detail::write_artifact(dir / "plot_ratios.csv", csv);
  report.push_back({cfg.id, seed0, 0, "frequency_in_band",
                    static_cast<double>(in_band) / trials});

  summary["schedule"] = schedule_json(sched);
  summary["sigma_band"] = {
      {"anchor_grad_norm", grad_norm},
      {"band_lower", kBandLo},
      {"band_upper", kBandHi},
      {"trials", trials},
      {"in_band", in_band},
      {"frequency_in_band", static_cast<double>(in_band) / trials}};
}

void run_adaptive_vs_vanilla(const ExperimentConfig& cfg,
                             const CliOverrides& ov, const fs::path& dir,
                             ordered_json& summary,
                             std::vector<ReportRow>& report) {
  const Objective obj = build_objective(cfg.objective);
  const Eigen::VectorXd x0 = build_x0(cfg.objective);
  const std::uint64_t seed0 = ov.seed.value_or(cfg.seed);
  const long trials = ov.trials.value_or(cfg.trials);
  const double target = cfg.run.target;

  ExperimentConfig cfg_eps = cfg;
  if (!cfg_eps.schedule.epsilon) cfg_eps.schedule.epsilon = target;
  const Schedule sched = resolve_schedule(cfg_eps, obj, cfg.run.iterations);

  double vanilla_eta;
  if (cfg.run.vanilla_eta == "auto") {
    // The conservative step a fixed-step method must take at the
    // initialization: 1 / (L0 + L1 ||grad f(x0)||).
    vanilla_eta = 1.0 / (obj.l0 + obj.l1 * obj.grad(x0).norm());
  } else {
    vanilla_eta = std::stod(cfg.run.vanilla_eta);
  }
  const long vanilla_T = cfg.run.vanilla_iterations > 0
                             ? cfg.run.vanilla_iterations
                             : 2 * cfg.run.iterations;

  SolverOptions options;
  options.with_diagnostics = true;
  options.target_grad_norm = target;

  struct Pair {
    RunResult adaptive, vanilla;
  };
  std::vector<Pair> pairs(static_cast<std::size_t>(trials));
  detail::parallel_for(trials, ov.jobs, [&](long i) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
    SketchSpec spec = cfg.sketch;
    spec.seed = seed;
    auto& p = pairs[static_cast<std::size_t>(i)];
    p.adaptive = run_adaptive_det(obj, sched, spec, x0, seed, options);
    p.vanilla = run_vanilla(obj, vanilla_eta, sched.alpha, spec, vanilla_T, x0,
                            seed ^ 0x5eedULL, options);
  });

  summary["schedule"] = schedule_json(sched);
  summary["vanilla"] = {{"eta", vanilla_eta},
                        {"alpha", sched.alpha},
                        {"iterations", vanilla_T}};
  ordered_json jruns = ordered_json::array();
  for (long i = 0; i < trials; ++i) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
    auto& p = pairs[static_cast<std::size_t>(i)];
    const std::string atrace = "trace_seed" + std::to_string(seed) + ".csv";
    const std::string vtrace =
        "trace_vanilla_seed" + std::to_string(seed) + ".csv";
    detail::write_artifact(dir / atrace, trace_csv(p.adaptive, cfg.sketch.num_cols));
    detail::write_artifact(dir / vtrace, trace_csv(p.vanilla, cfg.sketch.num_cols));
    const ComparisonRecord cmp = compare_runs(p.adaptive, p.vanilla, target);
    ordered_json j;
    j["seed"] = seed;
    j["trace_adaptive"] = atrace;
    j["trace_vanilla"] = vtrace;
    j["queries_adaptive"] = cmp.first_a.reached
                                ? cmp.first_a.queries
                                : p.adaptive.total_queries;
    j["reached_adaptive"] = cmp.first_a.reached;
    j["queries_vanilla"] = cmp.first_b.reached ? cmp.first_b.queries
                                               : p.vanilla.total_queries;
    j["reached_vanilla"] = cmp.first_b.reached;
    j["query_ratio"] = std::isfinite(cmp.query_ratio)
                           ? ordered_json(cmp.query_ratio)
                           : ordered_json("unreached");
    j["winner"] = cmp.winner == CompareWinner::a
                      ? "adaptive"
                      : (cmp.winner == CompareWinner::b ? "vanilla" : "tie");
    jruns.push_back(j);
    report.push_back({cfg.id, seed, i, "queries_adaptive",
                      static_cast<double>(j["queries_adaptive"].get<long>())});
    report.push_back({cfg.id, seed, i, "queries_vanilla",
                      static_cast<double>(j["queries_vanilla"].get<long>())});
    report.push_back({cfg.id, seed, i, "query_ratio", cmp.query_ratio});
  }
  summary["comparison"] = jruns;
}

void run_sketch_properties(const ExperimentConfig& cfg, const CliOverrides& ov,
                           const fs::path& dir, ordered_json& summary,
                           std::vector<ReportRow>& report) {
  const long trials = ov.trials.value_or(cfg.trials);
  const std::uint64_t seed0 = ov.seed.value_or(cfg.seed);
  const int d = cfg.objective.dim;
  const int l = cfg.sketch.num_cols;
  const int k = cfg.sketch.target_rank;
  const double delta = cfg.sketch.failure_prob;
  const PSDMatrix H = build_h_matrix(cfg.objective.h_source, d,
                                     cfg.source_dir);
  const TheoryConstants consts = compute_constants(H, d, l, k);
  const double nu = cfg.objective.nu;

  // (a) Definition-style matrix product property on a random unit vector.
  std::vector<char> mp_fail(static_cast<std::size_t>(trials));
  std::vector<char> fro_fail(static_cast<std::size_t>(trials));
  std::vector<EventFlags> flags(static_cast<std::size_t>(trials));
  detail::parallel_for(trials, ov.jobs, [&](long i) {
    RngStream rng = RngStream::derive(seed0, stream_slot::kTrial,
                                      static_cast<std::uint64_t>(i));
    const SketchMatrix S = build_sketch(cfg.sketch, rng);
    Eigen::VectorXd a(d);
    for (int j = 0; j < d; ++j) a[j] = rng.normal();
    a.normalize();
    mp_fail[static_cast<std::size_t>(i)] =
        check_matrix_product(S, a, 0.25, k).holds ? 0 : 1;
    fro_fail[static_cast<std::size_t>(i)] =
        frobenius_bound_holds(S, k).holds ? 0 : 1;

    Eigen::VectorXd g(d);
    for (int j = 0; j < d; ++j) g[j] = rng.normal();
    g.normalize();
    EventFlags f = check_events_det(S, H, g, k, consts);
    if (nu > 0.0) {
      Eigen::VectorXd noise(d);
      double norm = 0.0;
      do {
        for (int j = 0; j < d; ++j) noise[j] = rng.normal();
        norm = noise.norm();
      } while (norm == 0.0);
      noise *= nu / norm;
      const EventFlags sf = check_events_sto(S, g + noise, g, k, consts);
      f.eh1 = sf.eh1;
      f.eh2_lower = sf.eh2_lower;
      f.eh2_upper = sf.eh2_upper;
      f.eh3 = sf.eh3;
      f.eh4 = sf.eh4;
    }
    flags[static_cast<std::size_t>(i)] = f;
  });

  long mp_failures = 0, fro_failures = 0;
  for (long i = 0; i < trials; ++i) {
    mp_failures += mp_fail[static_cast<std::size_t>(i)];
    fro_failures += fro_fail[static_cast<std::size_t>(i)];
  }
  const double mp_rate = static_cast<double>(mp_failures) / trials;
  summary["matrix_product"] = {
      {"gamma", 0.25},
      {"k", k},
      {"trials", trials},
      {"failures", mp_failures},
      {"failure_rate", mp_rate},
      {"delta", delta},
      {"certified", mp_rate <= delta}};
  summary["frobenius"] = {
      {"trials", trials},
      {"failures", fro_failures},
      {"holds_rate", 1.0 - static_cast<double>(fro_failures) / trials}};

  // Event frequencies from the same trial population.
  struct Counter {
    const char* name;
    long ok = 0, n = 0;
  };
  Counter counters[8] = {{"E1"}, {"E2"}, {"E3"}, {"E4"},
                         {"Eh1"}, {"Eh2"}, {"Eh3"}, {"Eh4"}};
  for (const auto& f : flags) {
    auto tally = [](Counter& c, const std::optional<Inequality>& flag,
                    bool holds) {
      if (flag) {
        ++c.n;
        if (holds) ++c.ok;
      }
    };
    tally(counters[0], f.e1, f.e1 && f.e1->holds);
    tally(counters[1], f.e2_lower, f.e2_lower && f.e2());
    tally(counters[2], f.e3, f.e3 && f.e3->holds);
    tally(counters[3], f.e4, f.e4 && f.e4->holds);
    tally(counters[4], f.eh1, f.eh1 && f.eh1->holds);
    tally(counters[5], f.eh2_lower, f.eh2_lower && f.eh2());
    tally(counters[6], f.eh3, f.eh3 && f.eh3->holds);
    tally(counters[7], f.eh4, f.eh4 && f.eh4->holds);
  }
  ordered_json jevents = ordered_json::array();
  std::string events_csv = "event,trials,successes,rate,floor\n";
  for (const auto& c : counters) {
    if (c.n == 0) continue;
    const double rate = static_cast<double>(c.ok) / c.n;
    jevents.push_back({{"event", c.name},
                       {"trials", c.n},
                       {"successes", c.ok},
                       {"rate", rate},
                       {"floor", 0.9}});
    events_csv += std::string(c.name) + ',' + std::to_string(c.n) + ',' +
                  std::to_string(c.ok) + ',' + detail::format_double(rate) +
                  ",0.9\n";
  }
  summary["events"] = jevents;
  detail::write_artifact(dir / "plot_events.csv", events_csv);

  // Trace-estimator certification: tau at the lemma's sufficient ell, and
  // the per-column H-norm bound at ell = 16 k log(4T/delta).
  const double eps_tr = 0.5;
  const int l_tau = std::max<int>(
      2, static_cast<int>(std::ceil(8.0 / (eps_tr * eps_tr) *
                                    (H.spectral_norm() / H.trace()) *
                                    std::log(2.0 / delta))));
  const long t_for_cols = cfg.run.iterations > 0 ? cfg.run.iterations : 100;
  const int l_cols = std::max<int>(
      2, static_cast<int>(std::ceil(16.0 * k * std::log(4.0 * t_for_cols / delta))));

  std::vector<char> tau_ok(static_cast<std::size_t>(trials));
  std::vector<char> cols_ok(static_cast<std::size_t>(trials));
  detail::parallel_for(trials, ov.jobs, [&](long i) {
    RngStream rng = RngStream::derive(seed0, stream_slot::kTrial,
                                      0x7a00000000000000ULL + static_cast<std::uint64_t>(i));
    SketchSpec spec_tau = cfg.sketch;
    spec_tau.num_cols = l_tau;
    const TraceEstimate te =
        trace_estimate(H, build_sketch(spec_tau, rng));
    tau_ok[static_cast<std::size_t>(i)] =
        std::abs(te.tau - H.trace()) <= eps_tr * H.trace() ? 1 : 0;

    SketchSpec spec_cols = cfg.sketch;
    spec_cols.num_cols = l_cols;
    const TraceEstimate tc =
        trace_estimate(H, build_sketch(spec_cols, rng));
    cols_ok[static_cast<std::size_t>(i)] = tc.all_within ? 1 : 0;
  });
  long tau_good = 0, cols_good = 0;
  for (long i = 0; i < trials; ++i) {
    tau_good += tau_ok[static_cast<std::size_t>(i)];
    cols_good += cols_ok[static_cast<std::size_t>(i)];
  }
  summary["trace_estimator"] = {
      {"epsilon", eps_tr},
      {"ell_tau", l_tau},
      {"tau_within_rate", static_cast<double>(tau_good) / trials},
      {"ell_columns", l_cols},
      {"columns_within_rate", static_cast<double>(cols_good) / trials},
      {"trials", trials}};

  report.push_back({cfg.id, seed0, 0, "matrix_product_failure_rate", mp_rate});
  report.push_back({cfg.id, seed0, 0, "frobenius_holds_rate",
                    1.0 - static_cast<double>(fro_failures) / trials});
  for (const auto& c : counters) {
    if (c.n == 0) continue;
    report.push_back({cfg.id, seed0, 0, std::string("event_rate_") + c.name,
                      static_cast<double>(c.ok) / c.n});
  }
  report.push_back({cfg.id, seed0, 0, "tau_within_rate",
                    static_cast<double>(tau_good) / trials});
  report.push_back({cfg.id, seed0, 0, "columns_within_rate",
                    static_cast<double>(cols_good) / trials});
}

}  // namespace

fs::path run_experiment(const ExperimentConfig& cfg,
                        const CliOverrides& overrides) {
  const fs::path dir = resolve_out_dir(cfg, overrides) / fs::path(cfg.id);
  fs::create_directories(dir);

  ExperimentConfig cfg_eff = cfg;
  if (overrides.with_diagnostics) {
    cfg_eff.run.with_diagnostics = *overrides.with_diagnostics;
  }

  ordered_json summary;
  summary["experiment"] = cfg.id;
  summary["kind"] = to_string(cfg.kind);
  summary["seed"] = overrides.seed.value_or(cfg.seed);
  summary["trials"] = overrides.trials.value_or(cfg.trials);
  std::vector<ReportRow> report;

  switch (cfg.kind) {
    case ExperimentKind::convergence_det:
    case ExperimentKind::convergence_sto:
      run_convergence(cfg_eff, overrides, dir, summary, report);
      break;
    case ExperimentKind::sigma_proportionality:
      run_sigma_proportionality(cfg_eff, overrides, dir, summary, report);
      break;
    case ExperimentKind::adaptive_vs_vanilla:
      run_adaptive_vs_vanilla(cfg_eff, overrides, dir, summary, report);
      break;
    case ExperimentKind::sketch_properties:
      run_sketch_properties(cfg_eff, overrides, dir, summary, report);
      break;
  }

  detail::write_artifact(dir / "report.csv", render_report(report));
  detail::write_artifact(dir / "summary.json", summary.dump(2) + "\n");
  return dir;
}

std::string render_report(const std::vector<ReportRow>& rows) {
  std::string out = "experiment,seed,index,metric,value\n";
  for (const auto& r : rows) {
    out += r.experiment + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.index) + ',' + r.metric + ',' +
           detail::format_double(r.value) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run comparison
// ---------------------------------------------------------------------------

namespace {

FirstHit first_hit(const RunResult& r, double target) {
  bool any_grad = false;
  for (const auto& row : r.trace) {
    if (!std::isfinite(row.true_grad_norm)) continue;
    any_grad = true;
    if (row.true_grad_norm <= target) {
      return {true, row.t, row.queries_so_far};
    }
  }
  if (!any_grad) {
    throw std::invalid_argument(
        "compare_runs: trace carries no diagnostic gradient norms");
  }
  return {false, -1, 0};
}

ComparisonRecord make_comparison(const FirstHit& a, const FirstHit& b) {
  ComparisonRecord cmp;
  cmp.first_a = a;
  cmp.first_b = b;
  if (a.reached && b.reached) {
    cmp.query_ratio = static_cast<double>(a.queries) / b.queries;
    cmp.winner = a.queries < b.queries
                     ? CompareWinner::a
                     : (b.queries < a.queries ? CompareWinner::b
                                              : CompareWinner::tie);
  } else if (a.reached) {
    cmp.query_ratio = std::numeric_limits<double>::infinity();
    cmp.winner = CompareWinner::a;
  } else if (b.reached) {
    cmp.query_ratio = std::numeric_limits<double>::infinity();
    cmp.winner = CompareWinner::b;
  } else {
    cmp.query_ratio = std::numeric_limits<double>::quiet_NaN();
    cmp.winner = CompareWinner::tie;
  }
  return cmp;
}

}  // namespace

ComparisonRecord compare_runs(const RunResult& a, const RunResult& b,
                              double target_grad_norm) {
  return make_comparison(first_hit(a, target_grad_norm),
                         first_hit(b, target_grad_norm));
}

ComparisonRecord compare_traces(const fs::path& trace_a,
                                const fs::path& trace_b,
                                double target_grad_norm) {
  auto load_hit = [target_grad_norm](const fs::path& p) -> FirstHit {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open trace: " + p.string());
    std::string line;
    if (!std::getline(in, line)) {
      throw std::runtime_error("empty trace: " + p.string());
    }
    const auto header = split(line, ',');
    int col_t = -1, col_g = -1, col_q = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == "t") col_t = static_cast<int>(i);
      if (header[i] == "grad_norm") col_g = static_cast<int>(i);
      if (header[i] == "queries") col_q = static_cast<int>(i);
    }
    if (col_t < 0 || col_g < 0 || col_q < 0) {
      throw std::runtime_error("trace missing diagnostic column: " +
                               p.string());
    }
    bool any = false;
    while (std::getline(in, line)) {
      const auto f = split(line, ',');
      const double g = std::strtod(f[static_cast<std::size_t>(col_g)].c_str(), nullptr);
      if (!std::isfinite(g)) continue;
      any = true;
      if (g <= target_grad_norm) {
        return {true, std::stol(f[static_cast<std::size_t>(col_t)]),
                std::stol(f[static_cast<std::size_t>(col_q)])};
      }
    }
    if (!any) {
      throw std::runtime_error("trace carries no diagnostic gradient norms: " +
                               p.string());
    }
    return {false, -1, 0};
  };
  return make_comparison(load_hit(trace_a), load_hit(trace_b));
}

}  // namespace adazo
