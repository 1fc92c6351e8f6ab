#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "adazo/errors.hpp"
#include "adazo/estimator.hpp"

using namespace adazo;

namespace {

SketchMatrix gaussian_sketch(int d, int l, std::uint64_t seed) {
  SketchSpec spec;
  spec.dim = d;
  spec.num_cols = l;
  spec.seed = seed;
  return build_sketch(spec);
}

Objective constant_objective(int dim, double c) {
  Objective obj;
  obj.dim = dim;
  obj.value = [c](const Eigen::VectorXd&) { return c; };
  obj.grad = [dim](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(dim).eval();
  };
  obj.H = PSDMatrix::identity(dim);
  obj.l0 = 0.0;
  obj.l1 = 0.0;
  return obj;
}

Objective linear_objective(const Eigen::VectorXd& c) {
  Objective obj;
  obj.dim = static_cast<int>(c.size());
  obj.value = [c](const Eigen::VectorXd& x) { return c.dot(x); };
  obj.grad = [c](const Eigen::VectorXd&) { return c; };
  obj.H = PSDMatrix::identity(obj.dim);
  obj.l0 = 0.0;
  obj.l1 = 0.0;
  return obj;
}

// Independent recomputation of g and sigma^2 for a linear objective:
// g = S S^T c by explicit loops, sigma^2 = (alpha^2/(l-1)) sum_j
// (<c,s_j> - mean)^2.
void linear_oracle(const Eigen::VectorXd& c, const SketchMatrix& S,
                   double alpha, Eigen::VectorXd& g_out, double& sig_sq_out) {
  const int d = S.dim(), l = S.cols();
  Eigen::VectorXd proj(l);
  for (int i = 0; i < l; ++i) {
    double dot = 0.0;
    for (int r = 0; r < d; ++r) dot += c[r] * S.matrix()(r, i);
    proj[i] = dot;
  }
  g_out = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < l; ++i) {
    for (int r = 0; r < d; ++r) g_out[r] += proj[i] * S.matrix()(r, i);
  }
  const double mean = proj.mean();
  double acc = 0.0;
  for (int i = 0; i < l; ++i) acc += (proj[i] - mean) * (proj[i] - mean);
  sig_sq_out = alpha * alpha * acc / (l - 1);
}

}  // namespace

TEST_CASE("constant objective gives zero estimator and zero sigma") {
  const auto S = gaussian_sketch(6, 4, 1);
  const auto est = estimate(constant_objective(6, 3.25), Eigen::VectorXd::Ones(6),
                            0.5, S);
  CHECK(est.g.norm() == 0.0);
  CHECK(est.sigma == 0.0);
  CHECK(est.batch.query_count == 5);
}

TEST_CASE("linear objective reproduces S S^T c and the sigma formula") {
  RngStream rng(12);
  Eigen::VectorXd c(10);
  for (int i = 0; i < 10; ++i) c[i] = rng.normal();
  const auto S = gaussian_sketch(10, 5, 2);
  const double alpha = 0.37;
  const auto est =
      estimate(linear_objective(c), Eigen::VectorXd::Ones(10), alpha, S);

  Eigen::VectorXd g_expected;
  double sig_sq_expected;
  linear_oracle(c, S, alpha, g_expected, sig_sq_expected);

  CHECK((est.g - g_expected).norm() <= 1e-12 * std::max(1.0, g_expected.norm()));
  CHECK(est.sigma * est.sigma ==
        doctest::Approx(sig_sq_expected).epsilon(1e-12));
}

TEST_CASE("quadratic residual is bounded by the exact Taylor term") {
  // For f = x^T A x / 2 the probe curvature is exactly
  // gamma_i = (alpha^2/2) s_i^T A s_i.
  Eigen::VectorXd lam(8);
  for (int i = 0; i < 8; ++i) lam[i] = 1.0 + i * 0.5;
  const PSDMatrix a = PSDMatrix::diagonal(lam);
  const Objective obj = make_quadratic(a, Eigen::VectorXd::Zero(8));
  const auto S = gaussian_sketch(8, 4, 3);
  RngStream rng(9);
  Eigen::VectorXd x(8);
  for (int i = 0; i < 8; ++i) x[i] = rng.normal();

  const double alpha = 1e-3;
  const auto est = estimate(obj, x, alpha, S);
  const Eigen::VectorXd linear = S.apply(S.apply_transpose(a.apply(x)));
  Eigen::VectorXd curvature = Eigen::VectorXd::Zero(8);
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd s = S.matrix().col(i);
    curvature += (alpha / 2.0) * a.quad(s) * s;
  }
  CHECK((est.g - linear).norm() <= curvature.norm() + 1e-10);
}

TEST_CASE("stochastic estimate with zero noise equals the deterministic one") {
  Eigen::VectorXd c(6);
  c << 1, -2, 0.5, 3, -1, 2;
  const Objective base = linear_objective(c);
  const StochasticObjective sobj = make_bounded_noise(base, 0.0, 1.0);
  const auto S = gaussian_sketch(6, 4, 4);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(6);
  const auto det = estimate(base, x, 0.2, S);
  const auto sto =
      estimate_stochastic(sobj, x, 0.2, S, Eigen::VectorXd::Zero(6));
  CHECK(det.g == sto.g);
  CHECK(det.sigma == sto.sigma);
}

TEST_CASE("linear base with noise gives S S^T (c + delta) exactly") {
  RngStream rng(44);
  Eigen::VectorXd c(9), delta(9);
  for (int i = 0; i < 9; ++i) {
    c[i] = rng.normal();
    delta[i] = rng.normal();
  }
  delta *= 0.5 / delta.norm();
  const StochasticObjective sobj =
      make_bounded_noise(linear_objective(c), 0.5, 1.0);
  const auto S = gaussian_sketch(9, 5, 6);
  const auto est =
      estimate_stochastic(sobj, Eigen::VectorXd::Zero(9), 0.1, S, delta);

  Eigen::VectorXd g_expected;
  double sig_sq_expected;
  linear_oracle(c + delta, S, 0.1, g_expected, sig_sq_expected);
  CHECK((est.g - g_expected).norm() <= 1e-12 * std::max(1.0, g_expected.norm()));
  CHECK(est.sigma * est.sigma ==
        doctest::Approx(sig_sq_expected).epsilon(1e-10));
}

TEST_CASE("constant base with noise isolates the sketched noise direction") {
  RngStream rng(45);
  Eigen::VectorXd delta(7);
  for (int i = 0; i < 7; ++i) delta[i] = rng.normal();
  delta *= 0.25 / delta.norm();
  const StochasticObjective sobj =
      make_bounded_noise(constant_objective(7, -2.0), 0.25, 1.0);
  const auto S = gaussian_sketch(7, 4, 8);
  const auto est =
      estimate_stochastic(sobj, Eigen::VectorXd::Ones(7), 0.3, S, delta);

  Eigen::VectorXd g_expected;
  double sig_sq_expected;
  linear_oracle(delta, S, 0.3, g_expected, sig_sq_expected);
  CHECK((est.g - g_expected).norm() <= 1e-12);
  CHECK(est.sigma * est.sigma ==
        doctest::Approx(sig_sq_expected).epsilon(1e-10));
}

TEST_CASE("decompose: linear objectives have zero residual") {
  Eigen::VectorXd c(5);
  c << 2, -1, 0.5, 1, 3;
  const auto S = gaussian_sketch(5, 3, 10);
  const auto dec =
      decompose(linear_objective(c), Eigen::VectorXd::Ones(5), 0.2, S);
  CHECK(dec.gamma.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(dec.v.cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("decompose: quadratic residual has the closed form") {
  Eigen::VectorXd lam(6);
  lam << 1, 2, 3, 0.5, 0.25, 4;
  const PSDMatrix a = PSDMatrix::diagonal(lam);
  const Objective obj = make_quadratic(a, Eigen::VectorXd::Zero(6));
  const auto S = gaussian_sketch(6, 4, 11);
  const double alpha = 0.05;
  RngStream rng(12);
  Eigen::VectorXd x(6);
  for (int i = 0; i < 6; ++i) x[i] = rng.normal();

  const auto dec = decompose(obj, x, alpha, S);
  for (int i = 0; i < 4; ++i) {
    const double expected = 0.5 * alpha * alpha * a.quad(S.matrix().col(i));
    CHECK(dec.gamma[i] == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("decomposition identity reconstructs the estimator") {
  // g = S S^T grad + (alpha/4) S v for any objective exposing grad.
  const Objective obj = make_cosh_sum(Eigen::VectorXd::Ones(8));
  const auto S = gaussian_sketch(8, 5, 13);
  RngStream rng(14);
  Eigen::VectorXd x(8);
  for (int i = 0; i < 8; ++i) x[i] = 2.0 * rng.normal();
  const double alpha = 0.01;

  const auto est = estimate(obj, x, alpha, S);
  const auto dec = decompose(obj, x, alpha, S);
  const Eigen::VectorXd rebuilt =
      dec.linear_part + (alpha / 4.0) * S.apply(dec.v);
  CHECK((est.g - rebuilt).norm() <= 1e-10 * std::max(1.0, est.g.norm()));
}

TEST_CASE("residual norm obeys the zeta1 bound when the event holds") {
  // On the quadratic with H = A: conditioned on sum |s_i^T H s_i|^2 <=
  // zeta1/||H||^2, the paper bounds ||v||^2 by 4 (L0 + L1 ||grad||)^2 zeta1.
  Eigen::VectorXd lam(12);
  for (int i = 0; i < 12; ++i) lam[i] = std::pow(0.8, i);
  const PSDMatrix a = PSDMatrix::diagonal(lam);
  const Objective obj = make_quadratic(a, Eigen::VectorXd::Zero(12));
  const TheoryConstants consts = compute_constants(a, 12, 6, 4);

  int checked = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto S = gaussian_sketch(12, 6, seed);
    double sum_sq = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double q = a.quad(S.matrix().col(i));
      sum_sq += q * q;
    }
    if (sum_sq * a.spectral_norm() * a.spectral_norm() > consts.zeta1) continue;
    ++checked;
    RngStream rng(seed + 1000);
    Eigen::VectorXd x(12);
    for (int i = 0; i < 12; ++i) x[i] = rng.normal();
    const auto dec = decompose(obj, x, 1e-3, S);
    const double envelope = obj.l0 + obj.l1 * obj.grad(x).norm();
    CHECK(dec.v.squaredNorm() <= 4.0 * envelope * envelope * consts.zeta1);
  }
  CHECK(checked > 100);
}

TEST_CASE("sigma band endpoints") {
  const auto zero = sigma_band(0.0, 1.0, 4);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == 0.0);

  const auto band = sigma_band(1.0, 8.0, 2);
  CHECK(band.lower == doctest::Approx(1.0));
  CHECK(band.upper == doctest::Approx(52.0));

  CHECK_THROWS_AS(sigma_band(1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("reconstruction invariant: g rebuilds from its batch") {
  const Objective obj = make_cosh_sum(Eigen::VectorXd::Ones(10));
  const auto S = gaussian_sketch(10, 6, 21);
  RngStream rng(22);
  Eigen::VectorXd x(10);
  for (int i = 0; i < 10; ++i) x[i] = rng.normal();
  const auto est = estimate(obj, x, 0.05, S);

  Eigen::VectorXd rebuilt = Eigen::VectorXd::Zero(10);
  for (int i = 0; i < 6; ++i) {
    rebuilt += (est.batch.probe_values[i] - est.batch.base_value) /
               est.batch.alpha * S.matrix().col(i);
  }
  CHECK((est.g - rebuilt).norm() <= 1e-12 * std::max(1.0, est.g.norm()));
}

TEST_CASE("sigma and g scale exactly under dyadic rescaling") {
  // Multiplication by powers of two is exact in IEEE arithmetic, so the
  // homogeneity of eq-g/eq-sig in function values is bitwise testable.
  const Objective obj = make_cosh_sum(Eigen::VectorXd::Ones(6));
  const Objective scaled = scale_objective(obj, 4.0);
  const auto S = gaussian_sketch(6, 4, 30);
  RngStream rng(31);
  Eigen::VectorXd x(6);
  for (int i = 0; i < 6; ++i) x[i] = rng.normal();

  const auto base = estimate(obj, x, 0.1, S);
  const auto big = estimate(scaled, x, 0.1, S);
  CHECK(big.sigma == 4.0 * base.sigma);
  CHECK(big.g == 4.0 * base.g);

  // Non-dyadic factors are exact only to rounding.
  const auto odd = estimate(scale_objective(obj, 3.0), x, 0.1, S);
  CHECK(odd.sigma == doctest::Approx(3.0 * base.sigma).epsilon(1e-14));
}

TEST_CASE("query accounting: exactly ell + 1 oracle calls per estimate") {
  int calls = 0;
  Objective obj;
  obj.dim = 5;
  obj.H = PSDMatrix::identity(5);
  obj.value = [&calls](const Eigen::VectorXd& x) {
    ++calls;
    return x.squaredNorm();
  };
  const auto S = gaussian_sketch(5, 7, 40);
  const auto est = estimate(obj, Eigen::VectorXd::Ones(5), 0.1, S);
  CHECK(calls == 8);
  CHECK(est.batch.query_count == 8);
}

TEST_CASE("non-finite probe values raise EvalFailure with the probe index") {
  Objective obj;
  obj.dim = 4;
  obj.H = PSDMatrix::identity(4);
  obj.value = [](const Eigen::VectorXd& x) {
    // Blows up away from the start point.
    return x[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN()
                      : x.squaredNorm();
  };
  SketchSpec spec;
  spec.dim = 4;
  spec.num_cols = 4;
  spec.seed = 3;
  const auto S = build_sketch(spec);
  try {
    estimate(obj, Eigen::VectorXd::Ones(4) * 0.999, 50.0, S);
    FAIL("expected EvalFailure");
  } catch (const EvalFailure& e) {
    CHECK(e.probe_index >= 0);
    CHECK(e.probe_index < 4);
  }
}

TEST_CASE("estimate rejects non-positive alpha") {
  const auto S = gaussian_sketch(4, 3, 50);
  CHECK_THROWS_AS(
      estimate(constant_objective(4, 1.0), Eigen::VectorXd::Zero(4), 0.0, S),
      std::invalid_argument);
}
