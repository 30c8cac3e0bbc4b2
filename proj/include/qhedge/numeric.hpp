#pragma once

#include <string>

#include <Eigen/Dense>

namespace qhedge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerances shared by every numerical routine. Passed explicitly; the
/// defaults reproduce the standard rank-revealing SVD cutoff.
struct NumericContext {
  /// Singular values below rank_factor * max(rows, cols) * eps * sigma_max
  /// are treated as zero.
  double rank_factor = 1.0;
  /// Relative residual below which a vector counts as lying in a subspace.
  double range_tol = 1e-9;
  /// PSD check: smallest eigenvalue >= -psd_tol * max(1, trace).
  double psd_tol = 1e-10;
  /// Symmetry check: |C - C^T| <= symmetry_tol * max(1, |C|).
  double symmetry_tol = 1e-10;
  /// Probability sums within this distance of one are re-normalized.
  double probability_tol = 1e-12;
  /// Rounding error, in ulps of their magnitude, assumed in gross returns
  /// derived from tree prices. Widens rank decisions on tree nodes.
  double tree_data_ulps = 16.0;

  /// Absolute singular-value cutoff for a matrix with the given shape and
  /// largest singular value. Callers that form a matrix as a product may pass
  /// the norm of the factors as sigma_max when it is larger.
  double singular_cutoff(Eigen::Index rows, Eigen::Index cols, double sigma_max) const;
};

inline const NumericContext& default_context() {
  static const NumericContext ctx{};
  return ctx;
}

bool all_finite(const Matrix& m);

/// Number formatting for messages, 12 significant digits.
std::string format_number(double x);

/// Throws InvalidInput naming `what` when an entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

}  // namespace qhedge
