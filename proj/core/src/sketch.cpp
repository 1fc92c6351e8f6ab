#include "adazo/sketch.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace adazo {

Eigen::VectorXd SketchMatrix::apply_transpose(const Eigen::VectorXd& x) const {
  if (x.size() != s_.rows()) {
    throw std::invalid_argument("apply_transpose: dimension mismatch");
  }
  return s_.transpose() * x;
}

Eigen::VectorXd SketchMatrix::apply(const Eigen::VectorXd& y) const {
  if (y.size() != s_.cols()) {
    throw std::invalid_argument("apply: dimension mismatch");
  }
  return s_ * y;
}

namespace detail {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

double spectral_norm_sym(const Eigen::MatrixXd& m, double rel_tol,
                         int max_iter) {
  const auto n = m.rows();
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(m(0, 0));

  // Deterministic non-degenerate start vector.
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n + 1);
  }
  v.normalize();

  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = m.selfadjointView<Eigen::Lower>() * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    if (it > 0 && std::abs(norm - est) <= rel_tol * norm) return norm;
    est = norm;
    v = w / norm;
  }
  return est;
}

}  // namespace detail

namespace {

void validate_spec(const SketchSpec& spec) {
  if (spec.dim <= 0) throw std::invalid_argument("build_sketch: d must be positive");
  if (spec.num_cols < 2) {
    throw std::invalid_argument(
        "build_sketch: num_cols must be >= 2 (the sample standard deviation "
        "needs ell - 1 >= 1)");
  }
  if (spec.family.variant == SketchVariant::sparse_embedding) {
    if (spec.family.sparsity_s < 1) {
      throw std::invalid_argument("build_sketch: sparsity_s must be positive");
    }
    if (spec.family.sparsity_s > spec.num_cols) {
      throw std::invalid_argument(
          "build_sketch: sparse-embedding requires sparsity_s <= num_cols");
    }
    if (spec.family.sparsity_s > spec.dim) {
      throw std::invalid_argument(
          "build_sketch: sparse-embedding requires sparsity_s <= d");
    }
  }
}

int hadamard_sign(std::uint32_t row, std::uint32_t col) {
  return (std::popcount(row & col) & 1) ? -1 : 1;
}

Eigen::MatrixXd build_gaussian(int d, int l, RngStream& rng) {
  Eigen::MatrixXd s(d, l);
  const double scale = 1.0 / std::sqrt(static_cast<double>(l));
  for (int j = 0; j < l; ++j) {
    for (int i = 0; i < d; ++i) s(i, j) = scale * rng.normal();
  }
  return s;
}

Eigen::MatrixXd build_rademacher(int d, int l, RngStream& rng) {
  Eigen::MatrixXd s(d, l);
  const double scale = 1.0 / std::sqrt(static_cast<double>(l));
  for (int j = 0; j < l; ++j) {
    for (int i = 0; i < d; ++i) s(i, j) = scale * rng.sign();
  }
  return s;
}

// S = (P H D)^T up to scale: column i is D . h_{r_i} truncated to d rows,
// where h_r is the r-th column of the d_pad Walsh-Hadamard matrix, D is a
// random sign diagonal and r_i is sampled uniformly with replacement. The
// 1/sqrt(ell) scale makes E[S S^T] = I.
Eigen::MatrixXd build_srht(int d, int l, RngStream& rng) {
  std::size_t d_pad = std::bit_ceil(static_cast<std::size_t>(d));
  std::vector<double> signs(static_cast<std::size_t>(d));
  for (auto& sg : signs) sg = rng.sign();
  const double scale = 1.0 / std::sqrt(static_cast<double>(l));
  Eigen::MatrixXd s(d, l);
  for (int j = 0; j < l; ++j) {
    const auto r = static_cast<std::uint32_t>(rng.uniform_below(d_pad));
    for (int i = 0; i < d; ++i) {
      s(i, j) = scale * signs[static_cast<std::size_t>(i)] *
                hadamard_sign(static_cast<std::uint32_t>(i), r);
    }
  }
  return s;
}

// Each column gets exactly sparsity_s non-zero rows (distinct, uniform) with
// independent signs. Entries are +-1/sqrt(s) times the sqrt(d/ell) overall
// scale that makes E[S S^T] = I.
Eigen::MatrixXd build_sparse_embedding(int d, int l, int s_nnz,
                                       RngStream& rng) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, l);
  const double mag = std::sqrt(static_cast<double>(d) /
                               (static_cast<double>(s_nnz) * l));
  std::vector<int> rows(static_cast<std::size_t>(s_nnz));
  for (int j = 0; j < l; ++j) {
    // Floyd's sampling: s_nnz distinct rows in draw order.
    std::unordered_set<int> chosen;
    int taken = 0;
    for (int t = d - s_nnz; t < d; ++t) {
      const int r = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(t) + 1));
      if (chosen.insert(r).second) {
        rows[static_cast<std::size_t>(taken++)] = r;
      } else {
        chosen.insert(t);
        rows[static_cast<std::size_t>(taken++)] = t;
      }
    }
    for (int q = 0; q < s_nnz; ++q) {
      s(rows[static_cast<std::size_t>(q)], j) = mag * rng.sign();
    }
  }
  return s;
}

}  // namespace

SketchMatrix build_sketch(const SketchSpec& spec, RngStream& stream) {
  validate_spec(spec);
  switch (spec.family.variant) {
    case SketchVariant::gaussian:
      return SketchMatrix(build_gaussian(spec.dim, spec.num_cols, stream));
    case SketchVariant::rademacher:
      return SketchMatrix(build_rademacher(spec.dim, spec.num_cols, stream));
    case SketchVariant::srht:
      return SketchMatrix(build_srht(spec.dim, spec.num_cols, stream));
    case SketchVariant::sparse_embedding:
      return SketchMatrix(build_sparse_embedding(
          spec.dim, spec.num_cols, spec.family.sparsity_s, stream));
  }
  throw std::logic_error("build_sketch: unknown variant");
}

SketchMatrix build_sketch(const SketchSpec& spec) {
  RngStream stream(spec.seed);
  return build_sketch(spec, stream);
}

SketchMatrix build_srht_with(int dim, const std::vector<double>& signs,
                             const std::vector<int>& rows) {
  const int l = static_cast<int>(rows.size());
  if (static_cast<int>(signs.size()) != dim) {
    throw std::invalid_argument("build_srht_with: need one sign per row");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(l));
  Eigen::MatrixXd s(dim, l);
  for (int j = 0; j < l; ++j) {
    for (int i = 0; i < dim; ++i) {
      s(i, j) = scale * signs[static_cast<std::size_t>(i)] *
                hadamard_sign(static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(rows[static_cast<std::size_t>(j)]));
    }
  }
  return SketchMatrix(std::move(s));
}

void fwht(std::span<double> v) {
  const std::size_t n = v.size();
  if (!detail::is_power_of_two(n)) {
    throw std::invalid_argument("fwht: length must be a power of two");
  }
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = v[j];
        const double y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
}

MatrixProductCheck check_matrix_product(const SketchMatrix& S,
                                        const Eigen::MatrixXd& A, double gamma,
                                        int k) {
  if (A.rows() != S.dim()) {
    throw std::invalid_argument("check_matrix_product: A must have d rows");
  }
  if (gamma <= 0.0 || gamma > 1.0) {
    throw std::invalid_argument("check_matrix_product: gamma in (0, 1]");
  }
  if (k < 1) throw std::invalid_argument("check_matrix_product: k >= 1");

  const Eigen::MatrixXd b = S.matrix().transpose() * A;  // ell x m
  const Eigen::MatrixXd gram_sketch = b.transpose() * b;
  const Eigen::MatrixXd gram = A.transpose() * A;
  const double lhs = detail::spectral_norm_sym(gram_sketch - gram);
  const double a_sq = detail::spectral_norm_sym(gram);
  const double fro_sq = gram.trace();
  const double rhs = gamma * (a_sq + fro_sq / k);
  return {lhs <= rhs, lhs, rhs};
}

FrobeniusCheck frobenius_bound_holds(const SketchMatrix& S, int k) {
  if (k < 1) throw std::invalid_argument("frobenius_bound_holds: k >= 1");
  const double fro_sq = S.matrix().squaredNorm();
  const double l = S.cols();
  const double bound = 5.0 * l / 4.0 + S.dim() * l / (4.0 * k);
  return {fro_sq <= bound, fro_sq, bound};
}

}  // namespace adazo
