#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adazo/estimator.hpp"
#include "adazo/objectives.hpp"
#include "adazo/sketch.hpp"

namespace adazo {

/// One measured inequality lhs <= rhs with its verdict; re-evaluating the
/// stored pair must reproduce the flag.
struct Inequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;

  static Inequality of(double lhs, double rhs) {
    return {lhs, rhs, lhs <= rhs};
  }
};

/// Per-iteration high-probability events. Deterministic events e1..e4 and
/// stochastic events eh1..eh4; absent optionals mean "not checked" (e.g. no
/// gradient oracle), never "violated". The two-sided events store both
/// inequalities separately.
struct EventFlags {
  std::optional<Inequality> e1, e2_lower, e2_upper, e3, e4;
  std::optional<Inequality> eh1, eh2_lower, eh2_upper, eh3, eh4;

  bool e2() const { return e2_lower->holds && e2_upper->holds; }
  bool eh2() const { return eh2_lower->holds && eh2_upper->holds; }
  bool all_det() const {
    return e1->holds && e2() && e3->holds && e4->holds;
  }
};

/// E1: sum_i |s_i^T H s_i|^2 <= zeta_1
/// E2: (3/4 - 1/k)||g||^2 <= ||S^T g||^2 <= (5/4 + 1/k)||g||^2
/// E3: ||S^T H S|| <= zeta_2   (power iteration on the ell x ell side)
/// E4: (1/ell)(sum_i <g, s_i>)^2 <= ||g||^2 / 4
EventFlags check_events_det(const SketchMatrix& S, const PSDMatrix& H,
                            const Eigen::VectorXd& grad, int k,
                            const TheoryConstants& consts);

/// Stochastic events on the noisy gradient g_xi = grad f(x; xi):
/// Eh1: sum_i ||s_i||^4 <= zeta_hat_1
/// Eh2: two-sided sketched-norm bound on g_xi
/// Eh3: mean-direction bound (E4 form) on g_xi
/// Eh4: ||S^T (g_xi - g)||^2 <= (5/4 + 1/k)||g_xi - g||^2
EventFlags check_events_sto(const SketchMatrix& S,
                            const Eigen::VectorXd& grad_noisy,
                            const Eigen::VectorXd& grad_true, int k,
                            const TheoryConstants& consts);

/// r = sigma sqrt(ell - 1) / (alpha ||grad||); the proportionality claim is
/// r in [1/8, 13/2]. Rejects grad_norm = 0.
double sigma_ratio(const GradientEstimate& est, double grad_norm, double alpha,
                   int l);

struct FrequencyReport {
  std::string event;
  long trials = 0;
  long successes = 0;
  double empirical_rate = 0.0;
  double theory_floor = 0.0;
};

/// Monte-Carlo event frequencies. The generator receives a derived
/// per-trial stream; events left unset in a trial are skipped for that
/// event's count (trials column reports the evaluated count).
std::vector<FrequencyReport> event_frequency(
    const std::function<EventFlags(RngStream&)>& generator, long trials,
    std::uint64_t master_seed, double theory_floor);

struct TraceEstimate {
  double tau = 0.0;            // sum_i s_i^T H s_i
  double max_col_hnorm = 0.0;  // max_i ||s_i||_H
  double col_bound = 0.0;      // 2 sqrt(tr H)
  int cols_within_bound = 0;
  bool all_within = false;
};

/// Hutchinson-style trace estimate from the sketch columns, plus the
/// per-column H-norm certificate ||s_i||_H <= 2 sqrt(tr H).
TraceEstimate trace_estimate(const PSDMatrix& H, const SketchMatrix& S);

}  // namespace adazo
