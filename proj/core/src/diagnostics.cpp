#include "adazo/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace adazo {

namespace {

Inequality mean_direction_bound(const SketchMatrix& S,
                                const Eigen::VectorXd& g) {
  const Eigen::VectorXd proj = S.apply_transpose(g);
  const double lhs = proj.sum() * proj.sum() / S.cols();
  return Inequality::of(lhs, 0.25 * g.squaredNorm());
}

}  // namespace

EventFlags check_events_det(const SketchMatrix& S, const PSDMatrix& H,
                            const Eigen::VectorXd& grad, int k,
                            const TheoryConstants& consts) {
  if (S.dim() != H.dim() || grad.size() != S.dim()) {
    throw std::invalid_argument("check_events_det: dimension mismatch");
  }
  if (k < 4) throw std::invalid_argument("check_events_det: k >= 4 required");

  EventFlags f;
  const int l = S.cols();

  double sum_sq = 0.0;
  for (int i = 0; i < l; ++i) {
    const double q = H.quad(S.matrix().col(i));
    sum_sq += q * q;
  }
  f.e1 = Inequality::of(sum_sq, consts.zeta1);

  const double g_sq = grad.squaredNorm();
  const double sketched_sq = S.apply_transpose(grad).squaredNorm();
  f.e2_lower = Inequality::of((0.75 - 1.0 / k) * g_sq, sketched_sq);
  f.e2_upper = Inequality::of(sketched_sq, (1.25 + 1.0 / k) * g_sq);

  const Eigen::MatrixXd hs = H.is_diagonal()
                                 ? Eigen::MatrixXd(H.diagonal_values().asDiagonal() * S.matrix())
                                 : Eigen::MatrixXd(H.dense_matrix() * S.matrix());
  const Eigen::MatrixXd gram = S.matrix().transpose() * hs;  // ell x ell
  f.e3 = Inequality::of(detail::spectral_norm_sym(gram), consts.zeta2);

  f.e4 = mean_direction_bound(S, grad);
  return f;
}

EventFlags check_events_sto(const SketchMatrix& S,
                            const Eigen::VectorXd& grad_noisy,
                            const Eigen::VectorXd& grad_true, int k,
                            const TheoryConstants& consts) {
  if (grad_noisy.size() != S.dim() || grad_true.size() != S.dim()) {
    throw std::invalid_argument("check_events_sto: dimension mismatch");
  }
  if (k < 4) throw std::invalid_argument("check_events_sto: k >= 4 required");

  EventFlags f;
  const int l = S.cols();

  double sum_norm4 = 0.0;
  for (int i = 0; i < l; ++i) {
    const double n2 = S.matrix().col(i).squaredNorm();
    sum_norm4 += n2 * n2;
  }
  f.eh1 = Inequality::of(sum_norm4, consts.hzeta1);

  const double gn_sq = grad_noisy.squaredNorm();
  const double sketched_sq = S.apply_transpose(grad_noisy).squaredNorm();
  f.eh2_lower = Inequality::of((0.75 - 1.0 / k) * gn_sq, sketched_sq);
  f.eh2_upper = Inequality::of(sketched_sq, (1.25 + 1.0 / k) * gn_sq);

  f.eh3 = mean_direction_bound(S, grad_noisy);

  const Eigen::VectorXd dev = grad_noisy - grad_true;
  f.eh4 = Inequality::of(S.apply_transpose(dev).squaredNorm(),
                         (1.25 + 1.0 / k) * dev.squaredNorm());
  return f;
}

double sigma_ratio(const GradientEstimate& est, double grad_norm, double alpha,
                   int l) {
  if (grad_norm <= 0.0) {
    throw std::invalid_argument(
        "sigma_ratio: grad_norm must be positive (branch on the "
        "zero-gradient case before calling)");
  }
  if (l < 2) throw std::invalid_argument("sigma_ratio: ell >= 2");
  return est.sigma * std::sqrt(static_cast<double>(l - 1)) /
         (alpha * grad_norm);
}

std::vector<FrequencyReport> event_frequency(
    const std::function<EventFlags(RngStream&)>& generator, long trials,
    std::uint64_t master_seed, double theory_floor) {
  if (trials < 1) throw std::invalid_argument("event_frequency: trials >= 1");

  struct Slot {
    const char* name;
    std::optional<bool> (*get)(const EventFlags&);
  };
  static const Slot slots[] = {
      {"E1", [](const EventFlags& f) {
         return f.e1 ? std::optional<bool>(f.e1->holds) : std::nullopt;
       }},
      {"E2", [](const EventFlags& f) {
         return f.e2_lower ? std::optional<bool>(f.e2()) : std::nullopt;
       }},
      {"E3", [](const EventFlags& f) {
         return f.e3 ? std::optional<bool>(f.e3->holds) : std::nullopt;
       }},
      {"E4", [](const EventFlags& f) {
         return f.e4 ? std::optional<bool>(f.e4->holds) : std::nullopt;
       }},
      {"Eh1", [](const EventFlags& f) {
         return f.eh1 ? std::optional<bool>(f.eh1->holds) : std::nullopt;
       }},
      {"Eh2", [](const EventFlags& f) {
         return f.eh2_lower ? std::optional<bool>(f.eh2()) : std::nullopt;
       }},
      {"Eh3", [](const EventFlags& f) {
         return f.eh3 ? std::optional<bool>(f.eh3->holds) : std::nullopt;
       }},
      {"Eh4", [](const EventFlags& f) {
         return f.eh4 ? std::optional<bool>(f.eh4->holds) : std::nullopt;
       }},
  };

  long evaluated[8] = {0};
  long successes[8] = {0};
  for (long t = 0; t < trials; ++t) {
    RngStream rng = RngStream::derive(master_seed, stream_slot::kTrial,
                                      static_cast<std::uint64_t>(t));
    const EventFlags flags = generator(rng);
    for (int e = 0; e < 8; ++e) {
      const auto verdict = slots[e].get(flags);
      if (verdict) {
        ++evaluated[e];
        if (*verdict) ++successes[e];
      }
    }
  }

  std::vector<FrequencyReport> out;
  for (int e = 0; e < 8; ++e) {
    if (evaluated[e] == 0) continue;
    FrequencyReport r;
    r.event = slots[e].name;
    r.trials = evaluated[e];
    r.successes = successes[e];
    r.empirical_rate =
        static_cast<double>(successes[e]) / static_cast<double>(evaluated[e]);
    r.theory_floor = theory_floor;
    out.push_back(std::move(r));
  }
  return out;
}

TraceEstimate trace_estimate(const PSDMatrix& H, const SketchMatrix& S) {
  if (H.dim() != S.dim()) {
    throw std::invalid_argument("trace_estimate: dimension mismatch");
  }
  TraceEstimate out;
  out.col_bound = 2.0 * std::sqrt(H.trace());
  for (int i = 0; i < S.cols(); ++i) {
    const double q = std::max(0.0, H.quad(S.matrix().col(i)));
    out.tau += q;
    const double hn = std::sqrt(q);
    out.max_col_hnorm = std::max(out.max_col_hnorm, hn);
    if (hn <= out.col_bound) ++out.cols_within_bound;
  }
  out.all_within = out.cols_within_bound == S.cols();
  return out;
}

}  // namespace adazo
