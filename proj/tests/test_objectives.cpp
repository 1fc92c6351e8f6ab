#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "adazo/objectives.hpp"

using namespace adazo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Central finite-difference Hessian diagonal for the cosh objective check.
double fd_hessian_norm_diag(const Objective& obj, const Eigen::VectorXd& x,
                            double h = 1e-5) {
  double worst = 0.0;
  for (int i = 0; i < obj.dim; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double second =
        (obj.value(xp) - 2.0 * obj.value(x) + obj.value(xm)) / (h * h);
    worst = std::max(worst, std::abs(second));
  }
  return worst;
}

}  // namespace

TEST_CASE("PSDMatrix caches norm and trace consistent with a direct solve") {
  RngStream rng(11);
  Eigen::MatrixXd b(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) b(i, j) = rng.normal();
  }
  const Eigen::MatrixXd h = b * b.transpose();
  const PSDMatrix m = PSDMatrix::dense(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  CHECK(m.spectral_norm() ==
        doctest::Approx(eig.eigenvalues().maxCoeff()).epsilon(1e-8));
  CHECK(m.trace() == doctest::Approx(h.trace()).epsilon(1e-12));
}

TEST_CASE("PSDMatrix rejects asymmetric and indefinite input") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(PSDMatrix::dense(bad), std::invalid_argument);
  CHECK_THROWS_AS(PSDMatrix::diagonal(vec({1.0, -0.5})), std::invalid_argument);
  // Tiny negative dust is accepted.
  CHECK_NOTHROW(PSDMatrix::diagonal(vec({1.0, -1e-12})));
}

TEST_CASE("quadratic objective evaluates value and gradient directly") {
  const Objective obj =
      make_quadratic(PSDMatrix::identity(2), Eigen::VectorXd::Zero(2));
  const Eigen::VectorXd x = vec({3.0, 4.0});
  CHECK(obj.value(x) == doctest::Approx(12.5));
  CHECK(obj.grad(x).isApprox(vec({3.0, 4.0})));
  CHECK(obj.grad(x).norm() == doctest::Approx(5.0));

  CHECK(obj.value(Eigen::VectorXd::Zero(2)) == 0.0);
  CHECK(obj.grad(Eigen::VectorXd::Zero(2)).norm() == 0.0);

  const Objective aniso =
      make_quadratic(PSDMatrix::diagonal(vec({1.0, 100.0})),
                     Eigen::VectorXd::Zero(2));
  const Eigen::VectorXd ones = vec({1.0, 1.0});
  CHECK(aniso.value(ones) == doctest::Approx(50.5));
  CHECK(aniso.grad(ones).isApprox(vec({1.0, 100.0})));
}

TEST_CASE("quadratic rejects mismatched x_star") {
  CHECK_THROWS_AS(
      make_quadratic(PSDMatrix::identity(3), Eigen::VectorXd::Zero(2)),
      std::invalid_argument);
}

TEST_CASE("cosh-sum objective basics") {
  const Objective obj = make_cosh_sum(vec({1.0}));
  CHECK(obj.value(vec({0.0})) == 0.0);
  CHECK(obj.grad(vec({0.0}))[0] == 0.0);
  CHECK(obj.value(vec({1.0})) == doctest::Approx(std::cosh(1.0) - 1.0));
  CHECK(obj.grad(vec({1.0}))[0] == doctest::Approx(std::sinh(1.0)));
  CHECK(obj.l0 == 1.0);
  CHECK(obj.l1 == 1.0);
  CHECK_THROWS_AS(make_cosh_sum(vec({1.0, 0.0})), std::invalid_argument);
}

TEST_CASE("cosh-sum satisfies the relaxed-smoothness Hessian bound") {
  const Objective obj = make_cosh_sum(vec({1.0, 1.0}));
  const Eigen::VectorXd x = vec({10.0, 0.0});
  const double hess = fd_hessian_norm_diag(obj, x);
  const double envelope = obj.l0 + obj.grad(x).norm();
  CHECK(hess / envelope <= 1.0 + 1e-4);
}

TEST_CASE("gradient oracles agree with central differences") {
  RngStream rng(77);
  std::vector<Eigen::VectorXd> points;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x[i] = 2.0 * rng.normal();
    points.push_back(x);
  }
  Eigen::VectorXd lam(6);
  for (int i = 0; i < 6; ++i) lam[i] = 0.5 + i;
  const Objective quad =
      make_quadratic(PSDMatrix::diagonal(lam), Eigen::VectorXd::Zero(6));
  CHECK(gradient_selftest(quad, points) < 1e-5);
  const Objective cosh = make_cosh_sum(Eigen::VectorXd::Ones(6));
  CHECK(gradient_selftest(cosh, points) < 1e-5);
}

TEST_CASE("values never drop below the recorded lower bound") {
  RngStream rng(78);
  const Objective quad = make_quadratic(PSDMatrix::identity(4),
                                        Eigen::VectorXd::Zero(4));
  const Objective cosh = make_cosh_sum(Eigen::VectorXd::Ones(4));
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = 3.0 * rng.normal();
    CHECK(quad.value(x) >= quad.f_star);
    CHECK(cosh.value(x) >= cosh.f_star);
  }
}

TEST_CASE("bounded noise: radius, zero mean, exact linearity") {
  const Objective base =
      make_quadratic(PSDMatrix::identity(16), Eigen::VectorXd::Zero(16));
  const StochasticObjective sobj = make_bounded_noise(base, 0.5, 1.0);

  RngStream rng(5);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(16);
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const Eigen::VectorXd delta = sobj.sample_noise(rng);
    CHECK(delta.norm() == doctest::Approx(0.5).epsilon(1e-12));
    mean += delta;
  }
  mean /= n;
  // Monte-Carlo mean oracle: ||mean|| concentrates at nu/sqrt(N).
  CHECK(mean.norm() <= 0.01 * 0.5);

  // Exact linearity: value(x,xi) - value(y,xi) - (f(x) - f(y)) = <delta, x-y>.
  RngStream rng2(6);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd delta = sobj.sample_noise(rng2);
    Eigen::VectorXd x(16), y(16);
    for (int i = 0; i < 16; ++i) {
      x[i] = rng2.normal();
      y[i] = rng2.normal();
    }
    const double lhs = sobj.value(x, delta) - sobj.value(y, delta) -
                       (base.value(x) - base.value(y));
    CHECK(lhs == doctest::Approx(delta.dot(x) - delta.dot(y)).epsilon(1e-12));
    // The gradient deviation equals delta with norm exactly nu.
    CHECK((sobj.grad(x, delta) - base.grad(x)).isApprox(delta));
  }
}

TEST_CASE("zero-noise wrapper returns the base value") {
  const Objective base =
      make_quadratic(PSDMatrix::identity(4), Eigen::VectorXd::Zero(4));
  const StochasticObjective sobj = make_bounded_noise(base, 0.0, 1.0);
  RngStream rng(1);
  const Eigen::VectorXd delta = sobj.sample_noise(rng);
  CHECK(delta.norm() == 0.0);
  const Eigen::VectorXd x = vec({1.0, -2.0, 0.5, 3.0});
  CHECK(sobj.value(x, delta) == base.value(x));
  CHECK_THROWS_AS(make_bounded_noise(base, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("theory constants by direct substitution") {
  const PSDMatrix h = PSDMatrix::identity(4);
  const TheoryConstants c = compute_constants(h, 4, 2, 4);
  CHECK(c.zeta2 == doctest::Approx(1.5));
  CHECK(c.zeta1 == doctest::Approx(9.0));
  CHECK(c.hzeta1 == doctest::Approx(9.0));
  CHECK_THROWS_AS(compute_constants(h, 4, 2, 3), std::invalid_argument);
}

TEST_CASE("theory constants are pure functions of their inputs") {
  RngStream rng(3);
  Eigen::VectorXd lam(8);
  for (int i = 0; i < 8; ++i) lam[i] = std::abs(rng.normal()) + 0.1;
  const PSDMatrix h = PSDMatrix::diagonal(lam);
  const TheoryConstants a = compute_constants(h, 8, 5, 6);
  const TheoryConstants b = compute_constants(h, 8, 5, 6);
  CHECK(a.zeta1 == b.zeta1);
  CHECK(a.zeta2 == b.zeta2);
  CHECK(a.hzeta1 == b.hzeta1);
}

TEST_CASE("smoothness envelope: trivial, quadratic equality, cosh sweep") {
  const PSDMatrix a = PSDMatrix::diagonal(vec({2.0, 0.5, 1.0}));
  const Objective quad = make_quadratic(a, Eigen::VectorXd::Zero(3));

  const Eigen::VectorXd x = vec({1.0, -1.0, 2.0});
  const auto trivial = smoothness_envelope_check(quad, x, x);
  CHECK(trivial.applicable);
  CHECK(trivial.holds);
  CHECK(trivial.lhs == 0.0);

  // For the quadratic with H = A the Taylor remainder is exactly the
  // envelope: equality case.
  RngStream rng(21);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd p(3), q(3);
    for (int i = 0; i < 3; ++i) {
      p[i] = rng.normal();
      q[i] = rng.normal();
    }
    const auto r = smoothness_envelope_check(quad, p, q);
    CHECK(r.applicable);
    CHECK(r.holds);
    CHECK(std::abs(r.lhs - r.rhs) <= 1e-10 * std::max(1.0, r.rhs));
  }

  // cosh-sum inside the trust radius: the curvature along a segment of
  // H-length r grows by at most e^r over its value at the base point, so
  // lhs <= e * rhs is the provable sweep bound at the declared (L0, L1).
  // The unscaled envelope itself fails for steps near the radius (1-d
  // counterexample: x = 3, step = 1).
  const Objective cosh = make_cosh_sum(Eigen::VectorXd::Ones(4));
  RngStream rng2(22);
  int plain_holds = 0;
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd p(4), step(4);
    for (int i = 0; i < 4; ++i) {
      p[i] = 2.0 * rng2.normal();
      step[i] = rng2.normal();
    }
    step *= rng2.uniform01() / step.norm();  // ||step||_H <= 1 = radius
    const auto r = smoothness_envelope_check(cosh, p, p + step);
    CHECK(r.applicable);
    CHECK(r.lhs <= std::exp(1.0) * r.rhs + 1e-10);
    if (r.holds) ++plain_holds;
  }
  CHECK(plain_holds >= 950);

  const Eigen::VectorXd far = vec({3.0, 0.0, 0.0, 0.0});
  const Eigen::VectorXd unit_step = vec({1.0, 0.0, 0.0, 0.0});
  const auto refuted = smoothness_envelope_check(cosh, far, far + unit_step);
  CHECK(refuted.applicable);
  CHECK_FALSE(refuted.holds);
}

TEST_CASE("scaled objective scales values, gradient and metadata") {
  const Objective base = make_cosh_sum(vec({1.0, 2.0}));
  const Objective scaled = scale_objective(base, 3.0);
  const Eigen::VectorXd x = vec({0.7, -0.3});
  CHECK(scaled.value(x) == doctest::Approx(3.0 * base.value(x)));
  CHECK(scaled.grad(x).isApprox(3.0 * base.grad(x)));
  CHECK(scaled.l0 == doctest::Approx(3.0 * base.l0));
  CHECK(scaled.l1 == base.l1);
}
