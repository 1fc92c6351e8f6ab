#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>

#include "adazo/rng.hpp"

namespace adazo {

/// Positive semi-definite matrix, dense symmetric or diagonal, with cached
/// spectral norm and trace. The geometry H of the smoothness assumption.
class PSDMatrix {
 public:
  static PSDMatrix dense(Eigen::MatrixXd h);
  static PSDMatrix diagonal(Eigen::VectorXd eigenvalues);
  static PSDMatrix identity(int dim);

  int dim() const { return dim_; }
  double spectral_norm() const { return spectral_norm_; }
  double trace() const { return trace_; }
  bool is_diagonal() const { return diag_.size() > 0; }
  const Eigen::VectorXd& diagonal_values() const { return diag_; }
  Eigen::MatrixXd dense_matrix() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;  // H x
  double quad(const Eigen::VectorXd& x) const;            // x^T H x
  double hnorm(const Eigen::VectorXd& x) const;           // ||x||_H

 private:
  PSDMatrix() = default;
  int dim_ = 0;
  double spectral_norm_ = 0.0;
  double trace_ = 0.0;
  Eigen::VectorXd diag_;   // diagonal representation when non-empty
  Eigen::MatrixXd dense_;  // dense representation otherwise
};

/// Black-box value oracle plus diagnostic gradient and smoothness metadata.
/// The solvers only query value(); grad() exists for diagnostics.
struct Objective {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;  // may be empty
  PSDMatrix H = PSDMatrix::identity(1);
  double l0 = 0.0;
  double l1 = 0.0;
  double f_star = 0.0;

  bool has_grad() const { return static_cast<bool>(grad); }
};

/// Noisy oracle f(x; xi) = f(x) + <delta(xi), x> with ||delta|| = nu and
/// zero-mean delta. A noise sample xi is represented by its drawn direction.
struct StochasticObjective {
  Objective base;
  double nu = 0.0;
  double hessian_bound = 0.0;  // L-hat over the region of interest

  Eigen::VectorXd sample_noise(RngStream& rng) const;
  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& delta) const {
    return base.value(x) + delta.dot(x);
  }
  Eigen::VectorXd grad(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& delta) const {
    return base.grad(x) + delta;
  }
};

/// zeta_1 = ||H||^2 (5 ell/4 + d ell/(4k))^2, zeta_2 = 5||H||/4 + tr(H)/(4k),
/// zeta_hat_1 = (5 ell/4 + d ell/(4k))^2, with the inputs echoed for audit.
struct TheoryConstants {
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  double hzeta1 = 0.0;
  int dim = 0;
  int num_cols = 0;
  int target_rank = 0;
  double h_norm = 0.0;
  double h_trace = 0.0;
};

TheoryConstants compute_constants(const PSDMatrix& H, int d, int l, int k);

/// f(x) = 1/2 (x - x*)^T A (x - x*); H = A, L0 = 1, L1 = 0, f* = 0.
Objective make_quadratic(const PSDMatrix& A, Eigen::VectorXd x_star);

/// f(x) = sum_i a_i (cosh(x_i) - 1); H = I, L0 = max a_i, L1 = 1, f* = 0.
Objective make_cosh_sum(Eigen::VectorXd weights);

/// c * f with metadata transformed accordingly (L0 scales, L1 unchanged).
Objective scale_objective(const Objective& base, double c);

/// Wrap an objective with exactly-linear bounded noise of radius nu.
StochasticObjective make_bounded_noise(Objective base, double nu, double l_hat);

struct EnvelopeCheck {
  bool applicable = false;
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Taylor-envelope test |f(y) - f(x) - <grad f(x), y-x>| <=
/// (L0 + L1 ||grad f(x)||)/2 ||y-x||_H^2 inside the H-norm trust radius
/// 1/(L1 sqrt(||H||)); vacuous radius when L1 = 0.
EnvelopeCheck smoothness_envelope_check(const Objective& obj,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& y);

/// Max relative error between grad() and central differences over the given
/// points (diagnostic self-test helper).
double gradient_selftest(const Objective& obj,
                         const std::vector<Eigen::VectorXd>& points,
                         double step = 1e-6);

}  // namespace adazo
