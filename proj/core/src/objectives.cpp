#include "adazo/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace adazo {

namespace {
constexpr double kPsdEigTolerance = -1e-10;
constexpr double kSymmetryTolerance = 1e-12;
}  // namespace

PSDMatrix PSDMatrix::dense(Eigen::MatrixXd h) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw std::invalid_argument("PSDMatrix: square non-empty matrix required");
  }
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw std::invalid_argument("PSDMatrix: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("PSDMatrix: eigendecomposition failed");
  }
  if (eig.eigenvalues().minCoeff() < kPsdEigTolerance) {
    throw std::invalid_argument("PSDMatrix: matrix is not PSD");
  }
  PSDMatrix m;
  m.dim_ = static_cast<int>(h.rows());
  m.spectral_norm_ = std::max(0.0, eig.eigenvalues().maxCoeff());
  m.trace_ = h.trace();
  m.dense_ = std::move(h);
  return m;
}

PSDMatrix PSDMatrix::diagonal(Eigen::VectorXd eigenvalues) {
  if (eigenvalues.size() == 0) {
    throw std::invalid_argument("PSDMatrix: empty diagonal");
  }
  if (eigenvalues.minCoeff() < kPsdEigTolerance) {
    throw std::invalid_argument("PSDMatrix: diagonal is not PSD");
  }
  PSDMatrix m;
  m.dim_ = static_cast<int>(eigenvalues.size());
  m.spectral_norm_ = std::max(0.0, eigenvalues.maxCoeff());
  m.trace_ = eigenvalues.sum();
  m.diag_ = std::move(eigenvalues);
  return m;
}

PSDMatrix PSDMatrix::identity(int dim) {
  return diagonal(Eigen::VectorXd::Ones(dim));
}

Eigen::MatrixXd PSDMatrix::dense_matrix() const {
  if (is_diagonal()) return diag_.asDiagonal();
  return dense_;
}

Eigen::VectorXd PSDMatrix::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("PSDMatrix::apply: dim");
  if (is_diagonal()) return diag_.cwiseProduct(x);
  return dense_ * x;
}

double PSDMatrix::quad(const Eigen::VectorXd& x) const {
  return x.dot(apply(x));
}

double PSDMatrix::hnorm(const Eigen::VectorXd& x) const {
  return std::sqrt(std::max(0.0, quad(x)));
}

TheoryConstants compute_constants(const PSDMatrix& H, int d, int l, int k) {
  if (k < 4) {
    throw std::invalid_argument("compute_constants: requires k >= 4");
  }
  if (l < 2) {
    throw std::invalid_argument("compute_constants: requires ell >= 2");
  }
  const double bracket =
      5.0 * l / 4.0 + static_cast<double>(d) * l / (4.0 * k);
  TheoryConstants c;
  c.zeta1 = H.spectral_norm() * H.spectral_norm() * bracket * bracket;
  c.zeta2 = 5.0 * H.spectral_norm() / 4.0 + H.trace() / (4.0 * k);
  c.hzeta1 = bracket * bracket;
  c.dim = d;
  c.num_cols = l;
  c.target_rank = k;
  c.h_norm = H.spectral_norm();
  c.h_trace = H.trace();
  return c;
}

Objective make_quadratic(const PSDMatrix& A, Eigen::VectorXd x_star) {
  if (x_star.size() != A.dim()) {
    throw std::invalid_argument("make_quadratic: x_star dimension mismatch");
  }
  Objective obj;
  obj.dim = A.dim();
  obj.H = A;
  obj.l0 = 1.0;
  obj.l1 = 0.0;
  obj.f_star = 0.0;
  obj.value = [A, x_star](const Eigen::VectorXd& x) {
    return 0.5 * A.quad(x - x_star);
  };
  obj.grad = [A, x_star](const Eigen::VectorXd& x) {
    return A.apply(x - x_star);
  };
  return obj;
}

Objective make_cosh_sum(Eigen::VectorXd weights) {
  if (weights.size() == 0 || weights.minCoeff() <= 0.0) {
    throw std::invalid_argument("make_cosh_sum: weights must be positive");
  }
  Objective obj;
  obj.dim = static_cast<int>(weights.size());
  obj.H = PSDMatrix::identity(obj.dim);
  obj.l0 = weights.maxCoeff();
  obj.l1 = 1.0;
  obj.f_star = 0.0;
  obj.value = [weights](const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      acc += weights[i] * (std::cosh(x[i]) - 1.0);
    }
    return acc;
  };
  obj.grad = [weights](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      g[i] = weights[i] * std::sinh(x[i]);
    }
    return g;
  };
  return obj;
}

Objective scale_objective(const Objective& base, double c) {
  if (c <= 0.0) throw std::invalid_argument("scale_objective: c > 0 required");
  Objective obj = base;
  auto value = base.value;
  auto grad = base.grad;
  obj.value = [value, c](const Eigen::VectorXd& x) { return c * value(x); };
  if (grad) {
    obj.grad = [grad, c](const Eigen::VectorXd& x) {
      return (c * grad(x)).eval();
    };
  }
  obj.l0 = c * base.l0;
  obj.f_star = c * base.f_star;
  return obj;
}

Eigen::VectorXd StochasticObjective::sample_noise(RngStream& rng) const {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(base.dim);
  if (nu == 0.0) return delta;
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = rng.normal();
    norm = delta.norm();
  } while (norm == 0.0);
  return (nu / norm) * delta;
}

StochasticObjective make_bounded_noise(Objective base, double nu,
                                       double l_hat) {
  if (nu < 0.0) throw std::invalid_argument("make_bounded_noise: nu >= 0");
  StochasticObjective s;
  s.base = std::move(base);
  s.nu = nu;
  s.hessian_bound = l_hat;
  return s;
}

EnvelopeCheck smoothness_envelope_check(const Objective& obj,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& y) {
  EnvelopeCheck out;
  const Eigen::VectorXd diff = y - x;
  const double hn = obj.H.hnorm(diff);
  const double hnorm_cap =
      (obj.l1 > 0.0 && obj.H.spectral_norm() > 0.0)
          ? 1.0 / (obj.l1 * std::sqrt(obj.H.spectral_norm()))
          : std::numeric_limits<double>::infinity();
  out.applicable = hn <= hnorm_cap;
  const Eigen::VectorXd g = obj.grad(x);
  out.lhs = std::abs(obj.value(y) - obj.value(x) - g.dot(diff));
  out.rhs = 0.5 * (obj.l0 + obj.l1 * g.norm()) * obj.H.quad(diff);
  out.holds = !out.applicable || out.lhs <= out.rhs + 1e-10;
  return out;
}

double gradient_selftest(const Objective& obj,
                         const std::vector<Eigen::VectorXd>& points,
                         double step) {
  double worst = 0.0;
  for (const auto& x : points) {
    const Eigen::VectorXd g = obj.grad(x);
    const double scale = std::max(1.0, g.norm());
    for (int i = 0; i < obj.dim; ++i) {
      Eigen::VectorXd xp = x;
      Eigen::VectorXd xm = x;
      const double h = step * std::max(1.0, std::abs(x[i]));
      xp[i] += h;
      xm[i] -= h;
      const double fd = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[i]) / scale);
    }
  }
  return worst;
}

}  // namespace adazo
