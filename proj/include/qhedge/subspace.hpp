#pragma once

#include "qhedge/numeric.hpp"

namespace qhedge {

/// A linear subspace of R^n stored as an orthonormal basis (columns).
/// The zero subspace has a basis with zero columns.
class SubspaceBasis {
 public:
  explicit SubspaceBasis(Eigen::Index ambient_dim = 0);

  /// Orthonormalizes the columns of `spanning` (rank-revealing, ctx cutoff
  /// relative to max(sigma_max, scale)).
  static SubspaceBasis span(const Matrix& spanning, const NumericContext& ctx = default_context(),
                            double scale = 0.0);
  /// Column space Ran(A).
  static SubspaceBasis range(const Matrix& a, const NumericContext& ctx = default_context());
  /// Null space Null(A).
  static SubspaceBasis null(const Matrix& a, const NumericContext& ctx = default_context(),
                            double scale = 0.0);
  static SubspaceBasis whole(Eigen::Index ambient_dim);

  Eigen::Index ambient_dim() const noexcept { return ambient_; }
  Eigen::Index dim() const noexcept { return basis_.cols(); }
  bool is_zero() const noexcept { return basis_.cols() == 0; }

  /// n x dim matrix with orthonormal columns.
  const Matrix& vectors() const noexcept { return basis_; }

  Matrix projector() const;
  /// Relative distance of x from the subspace, |x - Px| / max(1, |x|).
  double residual(const Vector& x) const;
  bool contains(const Vector& x, const NumericContext& ctx = default_context()) const;
  bool contains(const SubspaceBasis& other, const NumericContext& ctx = default_context()) const;

 private:
  SubspaceBasis(Eigen::Index ambient_dim, Matrix basis);

  Eigen::Index ambient_;
  Matrix basis_;
};

SubspaceBasis orthogonal_complement(const SubspaceBasis& l,
                                    const NumericContext& ctx = default_context());
SubspaceBasis subspace_sum(const SubspaceBasis& l, const SubspaceBasis& m,
                           const NumericContext& ctx = default_context());
SubspaceBasis intersection(const SubspaceBasis& l, const SubspaceBasis& m,
                           const NumericContext& ctx = default_context());
/// Image T(L) of a subspace under a linear map.
SubspaceBasis image(const Matrix& t, const SubspaceBasis& l,
                    const NumericContext& ctx = default_context());
/// Mutual containment.
bool same_subspace(const SubspaceBasis& l, const SubspaceBasis& m,
                   const NumericContext& ctx = default_context());

}  // namespace qhedge
