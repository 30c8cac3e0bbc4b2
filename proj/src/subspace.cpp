#include "qhedge/subspace.hpp"

#include <algorithm>

#include "qhedge/errors.hpp"
#include "qhedge/pinv.hpp"

namespace qhedge {

namespace {

void require_same_ambient(const SubspaceBasis& l, const SubspaceBasis& m, const char* op) {
  if (l.ambient_dim() != m.ambient_dim()) {
    throw InvalidInput(std::string(op) + ": ambient dimensions " +
                       std::to_string(l.ambient_dim()) + " and " +
                       std::to_string(m.ambient_dim()) + " differ");
  }
}

}  // namespace

SubspaceBasis::SubspaceBasis(Eigen::Index ambient_dim)
    : ambient_(ambient_dim), basis_(ambient_dim, 0) {}

SubspaceBasis::SubspaceBasis(Eigen::Index ambient_dim, Matrix basis)
    : ambient_(ambient_dim), basis_(std::move(basis)) {}

SubspaceBasis SubspaceBasis::span(const Matrix& spanning, const NumericContext& ctx,
                                  double scale) {
  require_finite(spanning, "subspace spanning set");
  const Eigen::Index n = spanning.rows();
  if (spanning.cols() == 0 || n == 0) {
    return SubspaceBasis(n);
  }
  Eigen::JacobiSVD<Matrix> svd(spanning, Eigen::ComputeFullU);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) {
    return SubspaceBasis(n);
  }
  const double cutoff =
      ctx.singular_cutoff(spanning.rows(), spanning.cols(), std::max(s(0), scale));
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cutoff) {
    ++r;
  }
  return SubspaceBasis(n, svd.matrixU().leftCols(r));
}

SubspaceBasis SubspaceBasis::range(const Matrix& a, const NumericContext& ctx) {
  return span(a, ctx);
}

SubspaceBasis SubspaceBasis::null(const Matrix& a, const NumericContext& ctx, double scale) {
  require_finite(a, "null-space input");
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) {
    return whole(n);
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  Eigen::Index r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = ctx.singular_cutoff(a.rows(), a.cols(), std::max(s(0), scale));
    while (r < s.size() && s(r) > cutoff) {
      ++r;
    }
  }
  return SubspaceBasis(n, svd.matrixV().rightCols(n - r));
}

SubspaceBasis SubspaceBasis::whole(Eigen::Index ambient_dim) {
  return SubspaceBasis(ambient_dim, Matrix::Identity(ambient_dim, ambient_dim));
}

Matrix SubspaceBasis::projector() const { return basis_ * basis_.transpose(); }

double SubspaceBasis::residual(const Vector& x) const {
  if (x.size() != ambient_) {
    throw InvalidInput("subspace residual: vector has dimension " + std::to_string(x.size()) +
                       ", ambient dimension is " + std::to_string(ambient_));
  }
  const Vector r = x - basis_ * (basis_.transpose() * x);
  return r.norm() / std::max(1.0, x.norm());
}

bool SubspaceBasis::contains(const Vector& x, const NumericContext& ctx) const {
  return residual(x) <= ctx.range_tol;
}

bool SubspaceBasis::contains(const SubspaceBasis& other, const NumericContext& ctx) const {
  require_same_ambient(*this, other, "subspace containment");
  for (Eigen::Index j = 0; j < other.dim(); ++j) {
    if (!contains(Vector(other.vectors().col(j)), ctx)) {
      return false;
    }
  }
  return true;
}

SubspaceBasis orthogonal_complement(const SubspaceBasis& l, const NumericContext& ctx) {
  if (l.is_zero()) {
    return SubspaceBasis::whole(l.ambient_dim());
  }
  return SubspaceBasis::null(l.vectors().transpose(), ctx);
}

SubspaceBasis subspace_sum(const SubspaceBasis& l, const SubspaceBasis& m,
                           const NumericContext& ctx) {
  require_same_ambient(l, m, "subspace sum");
  Matrix stacked(l.ambient_dim(), l.dim() + m.dim());
  stacked << l.vectors(), m.vectors();
  return SubspaceBasis::span(stacked, ctx);
}

SubspaceBasis intersection(const SubspaceBasis& l, const SubspaceBasis& m,
                           const NumericContext& ctx) {
  require_same_ambient(l, m, "subspace intersection");
  // L ∩ M = (L^⊥ + M^⊥)^⊥
  return orthogonal_complement(
      subspace_sum(orthogonal_complement(l, ctx), orthogonal_complement(m, ctx), ctx), ctx);
}

SubspaceBasis image(const Matrix& t, const SubspaceBasis& l, const NumericContext& ctx) {
  if (t.cols() != l.ambient_dim()) {
    throw InvalidInput("subspace image: map has " + std::to_string(t.cols()) +
                       " columns, subspace lives in R^" + std::to_string(l.ambient_dim()));
  }
  if (l.is_zero()) {
    return SubspaceBasis(t.rows());
  }
  return SubspaceBasis::span(t * l.vectors(), ctx, t.norm());
}

bool same_subspace(const SubspaceBasis& l, const SubspaceBasis& m, const NumericContext& ctx) {
  return l.dim() == m.dim() && l.contains(m, ctx) && m.contains(l, ctx);
}

}  // namespace qhedge
