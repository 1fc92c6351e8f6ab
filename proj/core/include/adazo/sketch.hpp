#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>

#include "adazo/rng.hpp"

namespace adazo {

enum class SketchVariant { gaussian, rademacher, srht, sparse_embedding };

struct SketchFamily {
  SketchVariant variant = SketchVariant::gaussian;
  int sparsity_s = 1;  // sparse_embedding only
};

/// Parameters of one sketch draw. num_cols is the probe batch size ell,
/// target_rank is the k of the (gamma, k, delta) matrix-product property.
struct SketchSpec {
  SketchFamily family;
  int dim = 0;       // ambient d
  int num_cols = 0;  // ell >= 2
  int target_rank = 4;
  double failure_prob = 0.1;
  std::uint64_t seed = 0;
};

/// A materialized d x ell sketching matrix. Immutable after construction;
/// safe to share across threads.
class SketchMatrix {
 public:
  explicit SketchMatrix(Eigen::MatrixXd columns) : s_(std::move(columns)) {}

  int dim() const { return static_cast<int>(s_.rows()); }
  int cols() const { return static_cast<int>(s_.cols()); }
  const Eigen::MatrixXd& matrix() const { return s_; }
  Eigen::VectorXd column(int i) const { return s_.col(i); }

  /// S^T x: entry i equals <s_i, x>.
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& x) const;
  /// S y.
  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;

 private:
  Eigen::MatrixXd s_;
};

/// Draw a sketch from an explicit stream (the solvers derive one per
/// iteration) or from spec.seed. Families are scaled so E[S S^T] = I_d.
SketchMatrix build_sketch(const SketchSpec& spec, RngStream& stream);
SketchMatrix build_sketch(const SketchSpec& spec);

/// Test hook: SRHT with injected sign diagonal and sampled row indices.
SketchMatrix build_srht_with(int dim, const std::vector<double>& signs,
                             const std::vector<int>& rows);

/// In-place unnormalized Walsh-Hadamard transform (+-1 entry convention),
/// O(n log n). Length must be a power of two.
void fwht(std::span<double> v);

struct MatrixProductCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Definition-style matrix-product test:
/// ||A^T S S^T A - A^T A|| <= gamma (||A||^2 + ||A||_F^2 / k),
/// spectral norms by power iteration on the m x m Gram matrices.
MatrixProductCheck check_matrix_product(const SketchMatrix& S,
                                        const Eigen::MatrixXd& A, double gamma,
                                        int k);

struct FrobeniusCheck {
  bool holds = false;
  double fro_sq = 0.0;
  double bound = 0.0;
};

/// ||S||_F^2 <= 5 ell / 4 + d ell / (4k).
FrobeniusCheck frobenius_bound_holds(const SketchMatrix& S, int k);

namespace detail {
/// Largest |eigenvalue| of a symmetric matrix by power iteration
/// (deterministic start, 1e-8 relative tolerance, 200-iteration cap).
double spectral_norm_sym(const Eigen::MatrixXd& m, double rel_tol = 1e-8,
                         int max_iter = 200);
bool is_power_of_two(std::size_t n);
}  // namespace detail

}  // namespace adazo
