#include "qhedge/qp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qhedge/errors.hpp"
#include "qhedge/pinv.hpp"

namespace qhedge {

namespace {

void require_full_row_rank(const Matrix& a, const NumericContext& ctx) {
  if (a.rows() == 0 || a.rows() > a.cols()) {
    throw InvalidProblem("constraint matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + "; need 1 <= k <= n");
  }
  const Eigen::Index r = numerical_rank(a, ctx);
  if (r < a.rows()) {
    throw InvalidProblem("constraint matrix has rank " + std::to_string(r) + " < " +
                         std::to_string(a.rows()) + " rows (full row rank required)");
  }
}

void require_shapes(const Matrix& c, const Vector& f, const Matrix& a) {
  if (c.rows() != c.cols()) {
    throw InvalidInput("C must be square, got " + std::to_string(c.rows()) + "x" +
                       std::to_string(c.cols()));
  }
  if (f.size() != c.rows()) {
    throw InvalidInput("F has dimension " + std::to_string(f.size()) + ", C is " +
                       std::to_string(c.rows()) + "x" + std::to_string(c.rows()));
  }
  if (a.cols() != c.rows()) {
    throw InvalidInput("A has " + std::to_string(a.cols()) + " columns, expected " +
                       std::to_string(c.rows()));
  }
}

SubspaceBasis bounded_subspace(const Matrix& c, const Matrix& a, const NumericContext& ctx) {
  return subspace_sum(SubspaceBasis::range(a.transpose(), ctx), SubspaceBasis::range(c, ctx), ctx);
}

double quadratic(const Matrix& c, const Vector& f, const Vector& x) {
  return x.dot(c * x) - 2.0 * x.dot(f);
}

SubspaceBasis solution_null_basis(const Matrix& c, const Matrix& a, const NumericContext& ctx) {
  return intersection(SubspaceBasis::null(c, ctx), SubspaceBasis::null(a, ctx), ctx);
}

void require_bounded(const QpProblem& p, const NumericContext& ctx) {
  require_full_row_rank(p.A(), ctx);
  Vector y = unbounded_direction(p.C(), p.F(), p.A(), ctx);
  const double residual = y.norm();
  if (residual > ctx.range_tol * std::max(1.0, p.F().norm())) {
    throw UnboundedProblem(
        "quadratic form is unbounded below on {x : Ax = b}: F is not in Ran(A') + Ran(C) "
        "(residual " + format_number(residual) + ")",
        std::move(y));
  }
}

}  // namespace

QpProblem::QpProblem(Matrix c, Vector f, Matrix a, Vector b, const NumericContext& ctx)
    : c_(std::move(c)), f_(std::move(f)), a_(std::move(a)), b_(std::move(b)) {
  require_shapes(c_, f_, a_);
  if (b_.size() != a_.rows()) {
    throw InvalidInput("b has dimension " + std::to_string(b_.size()) + ", A has " +
                       std::to_string(a_.rows()) + " rows");
  }
  require_finite(c_, "C");
  require_finite(f_, "F");
  require_finite(a_, "A");
  require_finite(b_, "b");
  const double scale = std::max(1.0, c_.norm());
  if ((c_ - c_.transpose()).norm() > ctx.symmetry_tol * scale) {
    throw InvalidProblem("C is not symmetric");
  }
  c_ = 0.5 * (c_ + c_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c_, Eigen::EigenvaluesOnly);
  const double trace = c_.trace();
  if (eig.eigenvalues()(0) < -ctx.psd_tol * std::max(1.0, std::abs(trace))) {
    throw InvalidProblem("C is not positive semidefinite (smallest eigenvalue " +
                         format_number(eig.eigenvalues()(0)) + ")");
  }
  require_full_row_rank(a_, ctx);
}

double QpProblem::objective(const Vector& x) const { return quadratic(c_, f_, x); }

Vector unbounded_direction(const Matrix& c, const Vector& f, const Matrix& a,
                           const NumericContext& ctx) {
  require_shapes(c, f, a);
  const SubspaceBasis s = bounded_subspace(c, a, ctx);
  return f - s.vectors() * (s.vectors().transpose() * f);
}

bool check_bounded(const Matrix& c, const Vector& f, const Matrix& a, const NumericContext& ctx) {
  require_shapes(c, f, a);
  require_full_row_rank(a, ctx);
  return bounded_subspace(c, a, ctx).contains(f, ctx);
}

QpSolution solve(const QpProblem& p, const NumericContext& ctx) {
  require_bounded(p, ctx);
  const Eigen::Index n = p.n();
  const Matrix identity = Matrix::Identity(n, n);
  const Matrix a_pinv = pinv(p.A(), ctx);
  // (M C M)^+ with M = I - A^+ A, evaluated as N (N'CN)^+ N' on an
  // orthonormal basis N of Null(A).
  const Matrix nb = SubspaceBasis::null(p.A(), ctx).vectors();
  const Matrix j = nb * pinv(nb.transpose() * p.C() * nb, ctx, p.C().norm()) * nb.transpose();

  QpSolution out;
  out.x_hat = j * p.F() + (identity - j * p.C()) * (a_pinv * p.b());
  out.value = p.objective(out.x_hat);
  out.null_basis = solution_null_basis(p.C(), p.A(), ctx);
  return out;
}

QpSolution solve_alt(const QpProblem& p, const NumericContext& ctx, AltBranch* branch) {
  require_bounded(p, ctx);
  const Eigen::Index n = p.n();
  const Matrix identity = Matrix::Identity(n, n);
  const Matrix c_pinv = pinv(p.C(), ctx);
  const Matrix a_pinv = pinv(p.A(), ctx);
  const Matrix at = p.A().transpose();

  const SubspaceBasis ran_c = SubspaceBasis::range(p.C(), ctx);
  const SubspaceBasis ran_at = SubspaceBasis::range(at, ctx);
  AltBranch taken = AltBranch::RangeContained;
  for (Eigen::Index j = 0; j < at.cols(); ++j) {
    if (!ran_c.contains(Vector(at.col(j)), ctx)) {
      taken = AltBranch::RangeComplement;
      break;
    }
  }

  // U spans the subspace Y that P projects onto (along Null(A)).
  Matrix u;
  if (taken == AltBranch::RangeContained) {
    u = c_pinv * at;
  } else {
    const Matrix leak = (identity - p.C() * c_pinv) * at;
    const SubspaceBasis shared = intersection(ran_at, ran_c, ctx);
    u.resize(n, leak.cols() + shared.dim());
    u << leak, c_pinv * shared.vectors();
  }
  const Matrix proj = oblique_projector(u, p.A(), ctx);
  const Matrix comp = identity - proj;
  const Vector base = proj * (a_pinv * p.b());
  const Matrix weighted = comp * c_pinv * comp.transpose();

  QpSolution out;
  out.x_hat = weighted * p.F() + base;
  out.value = p.objective(base) - p.F().dot(weighted * p.F());
  out.null_basis = solution_null_basis(p.C(), p.A(), ctx);
  if (branch != nullptr) {
    *branch = taken;
  }
  return out;
}

Vector constrained_lsq(const Matrix& a1, const Vector& b1, const Matrix& a2, const Vector& b2,
                       const NumericContext& ctx, double scale) {
  if (a1.cols() != a2.cols() || a1.rows() != b1.size() || a2.rows() != b2.size()) {
    throw InvalidInput("constrained_lsq: incompatible dimensions");
  }
  require_finite(a1, "A1");
  require_finite(b1, "b1");
  require_finite(a2, "A2");
  require_finite(b2, "b2");
  require_full_row_rank(a2, ctx);
  // x = (A1 M)^+ b1 + (I - (A1 M)^+ A1) A2^+ b2 with (A1 M)^+ = N (A1 N)^+ for an
  // orthonormal basis N of Null(A2).
  const Vector x0 = pinv(a2, ctx) * b2;
  const Matrix nb = SubspaceBasis::null(a2, ctx).vectors();
  const Matrix a1n_pinv = pinv(a1 * nb, ctx, std::max(scale, a1.norm()));
  return x0 + nb * (a1n_pinv * (b1 - a1 * x0));
}

}  // namespace qhedge
