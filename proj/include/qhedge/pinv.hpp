#pragma once

#include "qhedge/numeric.hpp"

namespace qhedge {

/// Moore-Penrose pseudoinverse via full SVD. Singular values below
/// ctx.singular_cutoff are dropped; the cutoff uses max(sigma_max, scale), so a
/// matrix that is rounding noise relative to `scale` has pseudoinverse zero.
/// Throws InvalidInput on non-finite input.
Matrix pinv(const Matrix& m, const NumericContext& ctx = default_context(), double scale = 0.0);

/// Numerical rank with the same cutoff as pinv.
Eigen::Index numerical_rank(const Matrix& m, const NumericContext& ctx = default_context(),
                            double scale = 0.0);

/// Orthogonal projector A A^+ onto Ran(A).
Matrix orth_projector(const Matrix& a, const NumericContext& ctx = default_context());

/// Oblique projector E = U (V U)^+ V for U (n x p) and V (q x n).
Matrix oblique_projector(const Matrix& u, const Matrix& v,
                         const NumericContext& ctx = default_context());

/// Residuals of the four Penrose conditions for a candidate inverse X of M.
struct PenroseResiduals {
  double mxm_minus_m;
  double xmx_minus_x;
  double mx_asymmetry;
  double xm_asymmetry;

  double max() const;
};

PenroseResiduals penrose_residuals(const Matrix& m, const Matrix& x);

}  // namespace qhedge
