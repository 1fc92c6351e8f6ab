#pragma once

#include <Eigen/Core>

#include "adazo/objectives.hpp"
#include "adazo/sketch.hpp"

namespace adazo {

/// Raw oracle returns behind one gradient estimate: the base value f(x)
/// (or f(x; xi)) and the ell probe values f(x + alpha s_i).
struct EvalBatch {
  double base_value = 0.0;
  Eigen::VectorXd probe_values;
  double alpha = 0.0;
  int query_count = 0;  // always ell + 1
};

struct GradientEstimate {
  Eigen::VectorXd g;
  double sigma = 0.0;
  EvalBatch batch;
};

/// g(x) = sum_i (f(x + alpha s_i) - f(x))/alpha * s_i and the sample
/// standard deviation (ell - 1 denominator) of the probe values. Exactly
/// ell + 1 oracle calls; deterministic given its inputs.
GradientEstimate estimate(const Objective& obj, const Eigen::VectorXd& x,
                          double alpha, const SketchMatrix& S);

/// Stochastic twin: the same noise sample xi (drawn once by the caller)
/// is used for the base value and all ell probes.
GradientEstimate estimate_stochastic(const StochasticObjective& obj,
                                     const Eigen::VectorXd& x, double alpha,
                                     const SketchMatrix& S,
                                     const Eigen::VectorXd& noise_delta);

/// gamma_i = f(x + alpha s_i) - f(x) - alpha <grad f(x), s_i>,
/// v_i = 4 gamma_i / alpha^2, linear_part = S S^T grad f(x), so that
/// g = linear_part + (alpha/4) S v.
struct ResidualDecomposition {
  Eigen::VectorXd gamma;
  Eigen::VectorXd v;
  Eigen::VectorXd linear_part;
};

ResidualDecomposition decompose(const Objective& obj, const Eigen::VectorXd& x,
                                double alpha, const SketchMatrix& S);

struct SigmaBand {
  double lower = 0.0;
  double upper = 0.0;
};

/// Proportionality band for sigma: lower = alpha g / (8 sqrt(ell - 1)),
/// upper = 13 alpha g / (2 sqrt(ell - 1)).
SigmaBand sigma_band(double grad_norm, double alpha, int l);

/// Probe deltas divided by sigma: the dimensionless weights the adaptive
/// update is assembled from.
Eigen::VectorXd normalized_probe_coefficients(const GradientEstimate& est);

namespace detail {
/// Two-pass sample standard deviation (ell - 1 denominator).
double sample_std(const Eigen::VectorXd& values);
}  // namespace detail

}  // namespace adazo
