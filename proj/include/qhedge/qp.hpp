#pragma once

#include "qhedge/numeric.hpp"
#include "qhedge/subspace.hpp"

namespace qhedge {

/// Minimize q(x) = x'Cx - 2x'F subject to Ax = b.
///
/// Construction validates the data: C square, symmetric and positive
/// semidefinite; A of full row rank k with k <= n. C is stored symmetrized.
class QpProblem {
 public:
  QpProblem(Matrix c, Vector f, Matrix a, Vector b, const NumericContext& ctx = default_context());

  const Matrix& C() const noexcept { return c_; }
  const Vector& F() const noexcept { return f_; }
  const Matrix& A() const noexcept { return a_; }
  const Vector& b() const noexcept { return b_; }
  Eigen::Index n() const noexcept { return c_.rows(); }
  Eigen::Index k() const noexcept { return a_.rows(); }

  /// q(x) = x'Cx - 2x'F.
  double objective(const Vector& x) const;

 private:
  Matrix c_;
  Vector f_;
  Matrix a_;
  Vector b_;
};

struct QpSolution {
  /// Minimum-norm minimizer.
  Vector x_hat;
  /// q(x_hat).
  double value = 0.0;
  /// Basis of Null(C) ∩ Null(A); the minimizer set is x_hat + span(null_basis).
  SubspaceBasis null_basis;
  bool bounded = true;
};

/// Which projector representation solve_alt used.
enum class AltBranch {
  /// Ran(A') ⊆ Ran(C): P = C^+A'(AC^+A')^+A.
  RangeContained,
  /// Otherwise: P built from (I - CC^+)A' (plus C^+(Ran(A') ∩ Ran(C)) when k > 1).
  RangeComplement,
};

/// True iff F ∈ Ran(A') + Ran(C). Throws InvalidProblem if rank(A) < rows(A).
bool check_bounded(const Matrix& c, const Vector& f, const Matrix& a,
                   const NumericContext& ctx = default_context());

/// Orthogonal projection of F onto (Ran(C) + Ran(A'))^⊥. Nonzero exactly when
/// q is unbounded below; q(x + t y) = q(x) - 2t|y|^2 for feasible x.
Vector unbounded_direction(const Matrix& c, const Vector& f, const Matrix& a,
                           const NumericContext& ctx = default_context());

/// x_hat = JF + (I - JC)A^+b with J = (MCM)^+, M = I - A^+A.
/// Throws UnboundedProblem carrying the descent direction.
QpSolution solve(const QpProblem& problem, const NumericContext& ctx = default_context());

/// Same minimizer through the oblique projector P = P_{Y,X} with X = Null(A):
/// x_hat = (I - P)C^+(I - P')F + PA^+b.
QpSolution solve_alt(const QpProblem& problem, const NumericContext& ctx = default_context(),
                     AltBranch* branch = nullptr);

/// Minimum-norm minimizer of |A1 x - b1|^2 subject to A2 x = b2, rank(A2) = rows(A2).
/// `scale` bounds the magnitude A1 was computed from (see pinv).
Vector constrained_lsq(const Matrix& a1, const Vector& b1, const Matrix& a2, const Vector& b2,
                       const NumericContext& ctx = default_context(), double scale = 0.0);

}  // namespace qhedge
