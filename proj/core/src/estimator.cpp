#include "adazo/estimator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "adazo/errors.hpp"

namespace adazo {

namespace detail {

double sample_std(const Eigen::VectorXd& values) {
  const auto n = values.size();
  if (n < 2) throw std::invalid_argument("sample_std: need at least 2 values");
  const double mean = values.sum() / static_cast<double>(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dev = values[i] - mean;
    acc += dev * dev;
  }
  return std::sqrt(acc / static_cast<double>(n - 1));
}

}  // namespace detail

namespace {

void require_finite(double v, int probe_index) {
  if (!std::isfinite(v)) {
    throw EvalFailure(probe_index,
                      probe_index < 0
                          ? "objective returned a non-finite base value"
                          : "objective returned a non-finite value at probe " +
                                std::to_string(probe_index));
  }
}

template <typename ValueFn>
GradientEstimate estimate_impl(int dim, const ValueFn& value,
                               const Eigen::VectorXd& x, double alpha,
                               const SketchMatrix& S) {
  if (alpha <= 0.0) throw std::invalid_argument("estimate: alpha > 0 required");
  if (S.dim() != dim || x.size() != dim) {
    throw std::invalid_argument("estimate: dimension mismatch");
  }
  const int l = S.cols();

  GradientEstimate est;
  est.batch.alpha = alpha;
  est.batch.query_count = l + 1;
  est.batch.base_value = value(x);
  require_finite(est.batch.base_value, -1);

  est.batch.probe_values.resize(l);
  for (int i = 0; i < l; ++i) {
    const double p = value(x + alpha * S.matrix().col(i));
    require_finite(p, i);
    est.batch.probe_values[i] = p;
  }

  // The sample standard deviation of the probe values is shift-invariant,
  // so it is computed from the base-shifted deltas (less cancellation when
  // alpha is tiny). The base value itself never enters sigma.
  const Eigen::VectorXd deltas =
      (est.batch.probe_values.array() - est.batch.base_value).matrix();
  est.sigma = detail::sample_std(deltas);
  est.g = S.matrix() * (deltas / alpha);
  return est;
}

}  // namespace

GradientEstimate estimate(const Objective& obj, const Eigen::VectorXd& x,
                          double alpha, const SketchMatrix& S) {
  return estimate_impl(obj.dim, obj.value, x, alpha, S);
}

GradientEstimate estimate_stochastic(const StochasticObjective& obj,
                                     const Eigen::VectorXd& x, double alpha,
                                     const SketchMatrix& S,
                                     const Eigen::VectorXd& noise_delta) {
  auto value = [&obj, &noise_delta](const Eigen::VectorXd& z) {
    return obj.value(z, noise_delta);
  };
  return estimate_impl(obj.base.dim, value, x, alpha, S);
}

ResidualDecomposition decompose(const Objective& obj, const Eigen::VectorXd& x,
                                double alpha, const SketchMatrix& S) {
  if (!obj.has_grad()) {
    throw std::invalid_argument("decompose: objective has no gradient oracle");
  }
  if (alpha <= 0.0) throw std::invalid_argument("decompose: alpha > 0");
  const int l = S.cols();
  const Eigen::VectorXd g = obj.grad(x);
  const double base = obj.value(x);

  ResidualDecomposition out;
  out.gamma.resize(l);
  out.v.resize(l);
  for (int i = 0; i < l; ++i) {
    const Eigen::VectorXd s_i = S.matrix().col(i);
    out.gamma[i] = obj.value(x + alpha * s_i) - base - alpha * g.dot(s_i);
    // v_i = 4 gamma_i / alpha^2: the scaling under which both
    // g = S S^T grad + (alpha/4) S v and the curvature bound
    // |v_i| <= 2 (L0 + L1 ||grad||) ||s_i||_H^2 hold.
    out.v[i] = 4.0 * out.gamma[i] / (alpha * alpha);
  }
  out.linear_part = S.apply(S.apply_transpose(g));
  return out;
}

SigmaBand sigma_band(double grad_norm, double alpha, int l) {
  if (l < 2) throw std::invalid_argument("sigma_band: ell >= 2 required");
  if (alpha <= 0.0) throw std::invalid_argument("sigma_band: alpha > 0");
  if (grad_norm < 0.0) throw std::invalid_argument("sigma_band: grad_norm >= 0");
  const double root = std::sqrt(static_cast<double>(l - 1));
  return {alpha * grad_norm / (8.0 * root),
          13.0 * alpha * grad_norm / (2.0 * root)};
}

Eigen::VectorXd normalized_probe_coefficients(const GradientEstimate& est) {
  const Eigen::VectorXd deltas =
      (est.batch.probe_values.array() - est.batch.base_value).matrix();
  return deltas / est.sigma;
}

}  // namespace adazo
