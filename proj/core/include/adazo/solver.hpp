#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adazo/diagnostics.hpp"
#include "adazo/estimator.hpp"
#include "adazo/objectives.hpp"
#include "adazo/sketch.hpp"

namespace adazo {

/// Theory-derived run parameters. beta is 0 for the deterministic method.
/// provenance records which formula produced each value ("manual" for
/// explicit overrides).
struct Schedule {
  double alpha = 0.0;
  double eta = 0.0;
  double beta = 0.0;
  TheoryConstants constants;
  long iterations = 0;  // T
  int num_cols = 0;     // ell
  int target_rank = 0;  // k
  std::string provenance_alpha;
  std::string provenance_eta;
  std::string provenance_beta;
};

/// alpha^2 = min{ 1/(2 L1^2 zeta1 T), 3 eps^2 / (8 L0^2 zeta1) } (first
/// branch dropped when L1 = 0), eta = alpha / sqrt((ell-1) zeta2 T).
/// Validates the step-size condition eta <= 3 alpha / (64 L1 zeta2
/// sqrt(ell-1)); the error names the minimal admissible T.
Schedule derive_det_schedule(const Objective& obj, double epsilon, long T,
                             int l, int k);

/// alpha = min{ T^{-1/2}, sqrt(nu^2 / (8 Lhat^2 zeta_hat_1)) },
/// eta = alpha / (700 sqrt(T) sqrt(ell-1) zeta2 L1),
/// beta = alpha nu / (4 sqrt(ell-1)). Rejects L1 = 0 and nu = 0.
Schedule derive_sto_schedule(const StochasticObjective& obj, long T, int l,
                             int k);

/// Explicit (alpha, eta, beta), flagged "manual" in provenance.
Schedule manual_schedule(double alpha, double eta, double beta, long T, int l,
                         int k);

enum class StopReason {
  budget,
  target_reached,
  sigma_degenerate,
  oracle_failure,
  diverged
};

std::string to_string(StopReason r);

struct IterateRecord {
  long t = 0;
  double f_value = 0.0;
  double true_grad_norm = 0.0;  // NaN when the diagnostic oracle is off
  double sigma = 0.0;
  double step_norm = 0.0;
  long queries_so_far = 0;  // (t + 1)(ell + 1)
  bool sigma_floored = false;
  std::optional<EventFlags> events;
};

struct RunResult {
  Eigen::VectorXd final_x;
  double min_grad_norm = 0.0;  // NaN when diagnostics off
  long argmin_t = -1;          // earliest minimizing iteration
  long total_queries = 0;
  std::vector<IterateRecord> trace;
  StopReason reason = StopReason::budget;
  std::vector<Eigen::VectorXd> iterates;  // x_0..x_T when recorded
  long hnorm_step_violations = 0;  // among event-certified iterations
  double max_dist_x0 = 0.0;        // Euclidean excursion (diagnostics)
  double max_hdist_x0 = 0.0;       // H-norm excursion (diagnostics)
};

struct SolverOptions {
  bool with_diagnostics = false;  // use the gradient oracle for the trace
  bool check_events = false;      // per-iteration event flags (implies above)
  bool record_iterates = false;
  double target_grad_norm = 0.0;  // stop when reached (0 = disabled)
  double sigma_floor_rel = 1e-12;
  long max_floored_streak = 0;     // 0 = never stop on degenerate sigma
  double divergence_factor = 1e6;  // vanilla guard
};

/// Adaptive deterministic method: per iteration draw a fresh sketch S_t,
/// estimate (g, sigma_t), update x <- x - eta g / sigma_t. Iterations with
/// sigma below the relative floor skip the move and are flagged.
RunResult run_adaptive_det(const Objective& obj, const Schedule& sched,
                           const SketchSpec& spec, const Eigen::VectorXd& x0,
                           std::uint64_t master_seed,
                           const SolverOptions& options = {});

/// Adaptive stochastic method: one fresh noise sample and one fresh sketch
/// per iteration, update x <- x - eta g / (sigma_t + beta).
RunResult run_adaptive_sto(const StochasticObjective& obj,
                           const Schedule& sched, const SketchSpec& spec,
                           const Eigen::VectorXd& x0,
                           std::uint64_t master_seed,
                           const SolverOptions& options = {});

/// Fixed-step baseline x <- x - eta g with a divergence guard.
RunResult run_vanilla(const Objective& obj, double eta, double alpha,
                      const SketchSpec& spec, long T,
                      const Eigen::VectorXd& x0, std::uint64_t master_seed,
                      const SolverOptions& options = {});

namespace detail {
/// Round a dimensionless update coefficient to a fixed 17-bit mantissa
/// grid. The rounded coefficients are exact functions of the probe-value
/// ratios, which makes the iterate sequence bit-identical under positive
/// rescaling of the objective.
double quantize_coeff(double u);
}  // namespace detail

}  // namespace adazo
