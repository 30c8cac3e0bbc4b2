#include "qhedge/pinv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qhedge/errors.hpp"

namespace qhedge {

double NumericContext::singular_cutoff(Eigen::Index rows, Eigen::Index cols,
                                       double sigma_max) const {
  const auto dim = static_cast<double>(std::max(rows, cols));
  return rank_factor * dim * std::numeric_limits<double>::epsilon() * sigma_max;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + " has non-finite entries");
  }
}

namespace {

struct Svd {
  Eigen::JacobiSVD<Matrix> svd;
  Eigen::Index rank = 0;
};

Svd decompose(const Matrix& m, const NumericContext& ctx, double scale) {
  Svd out{Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeFullU | Eigen::ComputeFullV)};
  const Vector& s = out.svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) {
    return out;
  }
  const double cutoff = ctx.singular_cutoff(m.rows(), m.cols(), std::max(s(0), scale));
  while (out.rank < s.size() && s(out.rank) > cutoff) {
    ++out.rank;
  }
  return out;
}

}  // namespace

Matrix pinv(const Matrix& m, const NumericContext& ctx, double scale) {
  require_finite(m, "pinv input");
  if (m.size() == 0) {
    return Matrix::Zero(m.cols(), m.rows());
  }
  const Svd d = decompose(m, ctx, scale);
  const Eigen::Index r = d.rank;
  if (r == 0) {
    return Matrix::Zero(m.cols(), m.rows());
  }
  const Matrix& u = d.svd.matrixU();
  const Matrix& v = d.svd.matrixV();
  const Vector inv = d.svd.singularValues().head(r).cwiseInverse();
  return v.leftCols(r) * inv.asDiagonal() * u.leftCols(r).transpose();
}

Eigen::Index numerical_rank(const Matrix& m, const NumericContext& ctx, double scale) {
  require_finite(m, "rank input");
  if (m.size() == 0) {
    return 0;
  }
  return decompose(m, ctx, scale).rank;
}

Matrix orth_projector(const Matrix& a, const NumericContext& ctx) {
  return a * pinv(a, ctx);
}

Matrix oblique_projector(const Matrix& u, const Matrix& v, const NumericContext& ctx) {
  if (v.cols() != u.rows()) {
    throw InvalidInput("oblique_projector: U is " + std::to_string(u.rows()) + "x" +
                       std::to_string(u.cols()) + " but V is " + std::to_string(v.rows()) +
                       "x" + std::to_string(v.cols()));
  }
  require_finite(u, "oblique_projector U");
  require_finite(v, "oblique_projector V");
  return u * pinv(v * u, ctx, v.norm() * u.norm()) * v;
}

double PenroseResiduals::max() const {
  return std::max({mxm_minus_m, xmx_minus_x, mx_asymmetry, xm_asymmetry});
}

PenroseResiduals penrose_residuals(const Matrix& m, const Matrix& x) {
  const Matrix mx = m * x;
  const Matrix xm = x * m;
  return PenroseResiduals{
      (mx * m - m).norm(),
      (x * mx - x).norm(),
      (mx - mx.transpose()).norm(),
      (xm - xm.transpose()).norm(),
  };
}

}  // namespace qhedge
