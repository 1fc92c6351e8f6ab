#include "adazo/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "adazo/errors.hpp"

namespace adazo {

namespace detail {

double quantize_coeff(double u) {
  if (u == 0.0 || !std::isfinite(u)) return u;
  int e = 0;
  const double m = std::frexp(u, &e);
  return std::ldexp(std::nearbyint(std::ldexp(m, 17)), e - 17);
}

}  // namespace detail

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_run_inputs(const Schedule& sched, const SketchSpec& spec,
                         int dim, const Eigen::VectorXd& x0) {
  if (spec.dim != dim || x0.size() != dim) {
    throw std::invalid_argument("solver: dimension mismatch");
  }
  if (spec.num_cols != sched.num_cols) {
    throw std::invalid_argument(
        "solver: sketch num_cols disagrees with the schedule");
  }
  if (sched.alpha <= 0.0) {
    throw std::invalid_argument("solver: schedule alpha must be positive");
  }
  if (sched.eta < 0.0) {
    throw std::invalid_argument("solver: schedule eta must be non-negative");
  }
}

struct LoopState {
  RunResult result;
  double min_grad = std::numeric_limits<double>::infinity();
  long floored_streak = 0;
  bool diag = false;
};

void note_grad(LoopState& st, long t, double gn) {
  if (gn < st.min_grad) {
    st.min_grad = gn;
    st.result.argmin_t = t;
  }
}

void finalize(LoopState& st, const Eigen::VectorXd& x) {
  st.result.final_x = x;
  st.result.min_grad_norm = st.diag && st.result.argmin_t >= 0
                                ? st.min_grad
                                : kNaN;
  st.result.total_queries = st.result.trace.empty()
                                ? 0
                                : st.result.trace.back().queries_so_far;
}

}  // namespace

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::target_reached: return "target_reached";
    case StopReason::sigma_degenerate: return "sigma_degenerate";
    case StopReason::oracle_failure: return "oracle_failure";
    case StopReason::diverged: return "diverged";
  }
  return "unknown";
}

Schedule derive_det_schedule(const Objective& obj, double epsilon, long T,
                             int l, int k) {
  if (epsilon <= 0.0) {
    throw std::invalid_argument("derive_det_schedule: epsilon > 0 required");
  }
  if (T < 1) throw std::invalid_argument("derive_det_schedule: T >= 1");
  if (obj.l0 == 0.0 && obj.l1 == 0.0) {
    throw std::invalid_argument(
        "derive_det_schedule: L0 = L1 = 0 is degenerate");
  }
  const TheoryConstants consts = compute_constants(obj.H, obj.dim, l, k);

  const double branch_eps =
      3.0 * epsilon * epsilon / (8.0 * obj.l0 * obj.l0 * consts.zeta1);
  double alpha_sq = branch_eps;
  std::string prov = "alpha^2 = 3 eps^2 / (8 L0^2 zeta1)";
  if (obj.l1 > 0.0) {
    const double branch_t =
        1.0 / (2.0 * obj.l1 * obj.l1 * consts.zeta1 * static_cast<double>(T));
    if (branch_t < alpha_sq) {
      alpha_sq = branch_t;
      prov = "alpha^2 = 1 / (2 L1^2 zeta1 T)";
    }
  }

  Schedule sched;
  sched.alpha = std::sqrt(alpha_sq);
  sched.eta = sched.alpha /
              std::sqrt((l - 1) * consts.zeta2 * static_cast<double>(T));
  sched.beta = 0.0;
  sched.constants = consts;
  sched.iterations = T;
  sched.num_cols = l;
  sched.target_rank = k;
  sched.provenance_alpha = prov;
  sched.provenance_eta = "eta = alpha / sqrt((ell-1) zeta2 T)";
  sched.provenance_beta = "beta = 0 (deterministic)";

  if (obj.l1 > 0.0) {
    const double cap = 3.0 * sched.alpha /
                       (64.0 * obj.l1 * consts.zeta2 * std::sqrt(l - 1.0));
    if (sched.eta > cap) {
      const double min_t = (64.0 * obj.l1 / 3.0) * (64.0 * obj.l1 / 3.0) *
                           consts.zeta2 * (l - 1.0);
      throw std::invalid_argument(
          "derive_det_schedule: eta exceeds 3 alpha / (64 L1 zeta2 "
          "sqrt(ell-1)); need T >= " +
          std::to_string(static_cast<long>(std::ceil(min_t))));
    }
  }
  return sched;
}

Schedule derive_sto_schedule(const StochasticObjective& obj, long T, int l,
                             int k) {
  if (T < 1) throw std::invalid_argument("derive_sto_schedule: T >= 1");
  if (obj.base.l1 <= 0.0) {
    throw std::invalid_argument(
        "derive_sto_schedule: L1 = 0 rejected (eta divides by L1)");
  }
  if (obj.nu <= 0.0) {
    throw std::invalid_argument(
        "derive_sto_schedule: nu = 0 rejected (the beta floor vanishes; use "
        "the deterministic solver)");
  }
  if (obj.hessian_bound <= 0.0) {
    throw std::invalid_argument("derive_sto_schedule: Lhat > 0 required");
  }
  const TheoryConstants consts =
      compute_constants(obj.base.H, obj.base.dim, l, k);

  const double root_t = std::sqrt(static_cast<double>(T));
  const double cap = std::sqrt(
      obj.nu * obj.nu /
      (8.0 * obj.hessian_bound * obj.hessian_bound * consts.hzeta1));
  Schedule sched;
  if (1.0 / root_t <= cap) {
    sched.alpha = 1.0 / root_t;
    sched.provenance_alpha = "alpha = T^{-1/2}";
  } else {
    sched.alpha = cap;
    sched.provenance_alpha = "alpha = sqrt(nu^2 / (8 Lhat^2 zeta_hat_1))";
  }
  sched.eta = sched.alpha / (700.0 * root_t * std::sqrt(l - 1.0) *
                             consts.zeta2 * obj.base.l1);
  sched.beta = sched.alpha * obj.nu / (4.0 * std::sqrt(l - 1.0));
  sched.constants = consts;
  sched.iterations = T;
  sched.num_cols = l;
  sched.target_rank = k;
  sched.provenance_eta = "eta = alpha / (700 sqrt(T) sqrt(ell-1) zeta2 L1)";
  sched.provenance_beta = "beta = alpha nu / (4 sqrt(ell-1))";
  return sched;
}

Schedule manual_schedule(double alpha, double eta, double beta, long T, int l,
                         int k) {
  if (alpha <= 0.0) throw std::invalid_argument("manual_schedule: alpha > 0");
  Schedule sched;
  sched.alpha = alpha;
  sched.eta = eta;
  sched.beta = beta;
  sched.iterations = T;
  sched.num_cols = l;
  sched.target_rank = k;
  sched.provenance_alpha = "manual";
  sched.provenance_eta = "manual";
  sched.provenance_beta = "manual";
  return sched;
}

namespace {

/// Shared adaptive loop. `draw_noise` is empty for the deterministic method.
RunResult run_adaptive_impl(const Objective& base_obj,
                            const StochasticObjective* sto,
                            const Schedule& sched, const SketchSpec& spec,
                            const Eigen::VectorXd& x0,
                            std::uint64_t master_seed,
                            const SolverOptions& options) {
  validate_run_inputs(sched, spec, base_obj.dim, x0);
  if (sto != nullptr && sched.beta <= 0.0) {
    throw std::invalid_argument("run_adaptive_sto: schedule beta must be > 0");
  }

  const int l = spec.num_cols;
  const bool diag =
      (options.with_diagnostics || options.check_events) && base_obj.has_grad();
  const bool events = options.check_events && base_obj.has_grad();
  TheoryConstants consts;
  if (events) {
    consts = compute_constants(base_obj.H, base_obj.dim, l, spec.target_rank);
  }
  const double step_scale = sched.eta / sched.alpha;
  const double hnorm_cap =
      base_obj.l1 > 0.0 && base_obj.H.spectral_norm() > 0.0
          ? 1.0 / (base_obj.l1 * std::sqrt(base_obj.H.spectral_norm()))
          : std::numeric_limits<double>::infinity();

  LoopState st;
  st.diag = diag;
  st.result.trace.reserve(static_cast<std::size_t>(sched.iterations));
  Eigen::VectorXd x = x0;
  if (options.record_iterates) st.result.iterates.push_back(x);

  for (long t = 0; t < sched.iterations; ++t) {
    RngStream sketch_rng = RngStream::derive(master_seed, stream_slot::kSketch,
                                             static_cast<std::uint64_t>(t));
    const SketchMatrix S = build_sketch(spec, sketch_rng);

    GradientEstimate est;
    Eigen::VectorXd noise;
    try {
      if (sto != nullptr) {
        RngStream noise_rng = RngStream::derive(
            master_seed, stream_slot::kNoise, static_cast<std::uint64_t>(t));
        noise = sto->sample_noise(noise_rng);
        est = estimate_stochastic(*sto, x, sched.alpha, S, noise);
      } else {
        est = estimate(base_obj, x, sched.alpha, S);
      }
    } catch (const EvalFailure&) {
      st.result.reason = StopReason::oracle_failure;
      finalize(st, x);
      return st.result;
    }

    IterateRecord row;
    row.t = t;
    row.f_value = est.batch.base_value;
    row.sigma = est.sigma;
    row.queries_so_far = (t + 1) * (l + 1);
    row.true_grad_norm = kNaN;

    Eigen::VectorXd grad;
    if (diag) {
      grad = base_obj.grad(x);
      row.true_grad_norm = grad.norm();
      note_grad(st, t, row.true_grad_norm);
    }
    if (events) {
      EventFlags flags = check_events_det(S, base_obj.H, grad,
                                          spec.target_rank, consts);
      if (sto != nullptr) {
        const EventFlags sflags = check_events_sto(S, grad + noise, grad,
                                                   spec.target_rank, consts);
        flags.eh1 = sflags.eh1;
        flags.eh2_lower = sflags.eh2_lower;
        flags.eh2_upper = sflags.eh2_upper;
        flags.eh3 = sflags.eh3;
        flags.eh4 = sflags.eh4;
      }
      row.events = flags;
    }

    if (diag && options.target_grad_norm > 0.0 &&
        row.true_grad_norm <= options.target_grad_norm) {
      st.result.trace.push_back(std::move(row));
      st.result.reason = StopReason::target_reached;
      finalize(st, x);
      return st.result;
    }

    const double denom = est.sigma + sched.beta;
    const double floor =
        options.sigma_floor_rel * std::max(1.0, std::abs(row.f_value));
    const bool degenerate = sto == nullptr && est.sigma < floor;
    if (degenerate) {
      row.sigma_floored = true;
      row.step_norm = 0.0;
      ++st.floored_streak;
    } else {
      st.floored_streak = 0;
      // Dimensionless probe coefficients, rounded to a fixed grid so the
      // iterate map is exactly invariant under rescaling the objective.
      Eigen::VectorXd coeff =
          (est.batch.probe_values.array() - est.batch.base_value).matrix() /
          denom;
      for (Eigen::Index i = 0; i < coeff.size(); ++i) {
        coeff[i] = detail::quantize_coeff(coeff[i]);
      }
      const Eigen::VectorXd step = step_scale * (S.matrix() * coeff);
      row.step_norm = step.norm();
      if (events && base_obj.l1 > 0.0 && row.events->all_det()) {
        if (base_obj.H.hnorm(step) > hnorm_cap * (1.0 + 1e-9)) {
          ++st.result.hnorm_step_violations;
        }
      }
      x -= step;
    }

    if (diag) {
      st.result.max_dist_x0 =
          std::max(st.result.max_dist_x0, (x - x0).norm());
      st.result.max_hdist_x0 =
          std::max(st.result.max_hdist_x0, base_obj.H.hnorm(x - x0));
    }
    if (options.record_iterates) st.result.iterates.push_back(x);
    st.result.trace.push_back(std::move(row));

    if (degenerate && options.max_floored_streak > 0 &&
        st.floored_streak >= options.max_floored_streak) {
      st.result.reason = StopReason::sigma_degenerate;
      finalize(st, x);
      return st.result;
    }
  }

  st.result.reason = StopReason::budget;
  finalize(st, x);
  return st.result;
}

}  // namespace

RunResult run_adaptive_det(const Objective& obj, const Schedule& sched,
                           const SketchSpec& spec, const Eigen::VectorXd& x0,
                           std::uint64_t master_seed,
                           const SolverOptions& options) {
  return run_adaptive_impl(obj, nullptr, sched, spec, x0, master_seed,
                           options);
}

RunResult run_adaptive_sto(const StochasticObjective& obj,
                           const Schedule& sched, const SketchSpec& spec,
                           const Eigen::VectorXd& x0,
                           std::uint64_t master_seed,
                           const SolverOptions& options) {
  return run_adaptive_impl(obj.base, &obj, sched, spec, x0, master_seed,
                           options);
}

RunResult run_vanilla(const Objective& obj, double eta, double alpha,
                      const SketchSpec& spec, long T,
                      const Eigen::VectorXd& x0, std::uint64_t master_seed,
                      const SolverOptions& options) {
  if (eta < 0.0) throw std::invalid_argument("run_vanilla: eta >= 0");
  if (alpha <= 0.0) throw std::invalid_argument("run_vanilla: alpha > 0");
  if (spec.dim != obj.dim || x0.size() != obj.dim) {
    throw std::invalid_argument("run_vanilla: dimension mismatch");
  }

  const int l = spec.num_cols;
  const bool diag = options.with_diagnostics && obj.has_grad();
  LoopState st;
  st.diag = diag;
  st.result.trace.reserve(static_cast<std::size_t>(T));
  Eigen::VectorXd x = x0;
  if (options.record_iterates) st.result.iterates.push_back(x);
  double f0 = 0.0;

  for (long t = 0; t < T; ++t) {
    RngStream sketch_rng = RngStream::derive(master_seed, stream_slot::kSketch,
                                             static_cast<std::uint64_t>(t));
    const SketchMatrix S = build_sketch(spec, sketch_rng);

    GradientEstimate est;
    try {
      est = estimate(obj, x, alpha, S);
    } catch (const EvalFailure&) {
      st.result.reason = StopReason::oracle_failure;
      finalize(st, x);
      return st.result;
    }
    if (t == 0) f0 = est.batch.base_value;

    IterateRecord row;
    row.t = t;
    row.f_value = est.batch.base_value;
    row.sigma = est.sigma;
    row.queries_so_far = (t + 1) * (l + 1);
    row.true_grad_norm = kNaN;
    if (diag) {
      row.true_grad_norm = obj.grad(x).norm();
      note_grad(st, t, row.true_grad_norm);
    }

    if (row.f_value >
        f0 + options.divergence_factor * std::max(1.0, std::abs(f0))) {
      row.step_norm = 0.0;
      st.result.trace.push_back(std::move(row));
      st.result.reason = StopReason::diverged;
      finalize(st, x);
      return st.result;
    }

    if (diag && options.target_grad_norm > 0.0 &&
        row.true_grad_norm <= options.target_grad_norm) {
      st.result.trace.push_back(std::move(row));
      st.result.reason = StopReason::target_reached;
      finalize(st, x);
      return st.result;
    }

    const Eigen::VectorXd step = eta * est.g;
    row.step_norm = step.norm();
    x -= step;
    if (options.record_iterates) st.result.iterates.push_back(x);
    st.result.trace.push_back(std::move(row));
  }

  st.result.reason = StopReason::budget;
  finalize(st, x);
  return st.result;
}

}  // namespace adazo
