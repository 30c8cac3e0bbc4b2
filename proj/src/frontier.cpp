#include "qhedge/frontier.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "qhedge/errors.hpp"

namespace qhedge {

namespace {

void validate(const FrontierTriple& t) {
  if (!std::isfinite(t.L0) || !std::isfinite(t.V0_1) || !std::isfinite(t.eps2_0_1)) {
    throw InvalidInput("frontier triple has non-finite entries");
  }
  if (!(t.L0 > 0.0)) {
    throw InvalidInput("frontier triple needs L0 > 0, got " + format_number(t.L0));
  }
  if (t.eps2_0_1 < 0.0) {
    throw InvalidInput("frontier triple needs eps2 >= 0, got " + format_number(t.eps2_0_1));
  }
}

}  // namespace

double FrontierCurve::evaluate(double mean) const {
  const double gap = mean - center;
  return intercept + slope * gap * gap;
}

std::pair<FrontierCurve, FrontierCurve> frontier_coeffs(const FrontierTriple& triple) {
  validate(triple);
  const double zero_error = triple.zero_claim_error();
  const double spread = 1.0 - zero_error;
  if (spread == 0.0) {
    throw DegenerateFrontier("frontier denominator 1 - L0 V0(1)^2 - eps0^2(1) vanishes");
  }
  if (zero_error == 0.0) {
    throw DegenerateFrontier("frontier denominator L0 V0(1)^2 + eps0^2(1) vanishes");
  }
  FrontierCurve second;
  second.form = FrontierForm::SecondMoment;
  second.intercept = triple.L0;
  second.slope = 1.0 / spread;
  second.center = triple.L0 * triple.V0_1;
  second.triple = triple;

  FrontierCurve variance;
  variance.form = FrontierForm::Variance;
  variance.intercept = triple.L0 * triple.eps2_0_1 / zero_error;
  variance.slope = 1.0 / spread - 1.0;
  variance.center = triple.L0 * triple.V0_1 / zero_error;
  variance.triple = triple;
  return {second, variance};
}

EfficientThreshold efficient_threshold(const FrontierTriple& triple) {
  validate(triple);
  if (!(triple.V0_1 > 0.0)) {
    throw NotApplicable("efficient threshold needs V0(1) > 0, got " + format_number(triple.V0_1));
  }
  const double zero_error = triple.zero_claim_error();
  if (!(zero_error > 0.0)) {
    throw DegenerateFrontier("efficient threshold needs eps^2(0,1) = L0 V0(1)^2 + eps0^2(1) > 0");
  }
  EfficientThreshold out;
  out.lambda_min = triple.L0 * triple.V0_1 / zero_error;
  out.mean_min = triple.L0 * triple.V0_1 + out.lambda_min * (1.0 - zero_error);
  return out;
}

std::vector<FrontierPoint> sample_frontier(FrontierCurve& curve, double mean_lo, double mean_hi,
                                           int n) {
  if (n < 2) {
    throw InvalidInput("sample_frontier needs n >= 2, got " + std::to_string(n));
  }
  if (!std::isfinite(mean_lo) || !std::isfinite(mean_hi) || !(mean_lo < mean_hi)) {
    throw InvalidInput("sample_frontier needs finite mean_lo < mean_hi");
  }
  std::vector<FrontierPoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  const double step = (mean_hi - mean_lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double m = (i == n - 1) ? mean_hi : mean_lo + step * i;
    pts.push_back({m, curve.evaluate(m)});
  }
  curve.points = pts;
  return pts;
}

void write_frontier_csv(std::ostream& os, const FrontierCurve& variance_form, double mean_lo,
                        double mean_hi, int n) {
  FrontierCurve curve = variance_form;
  const auto pts = sample_frontier(curve, mean_lo, mean_hi, n);
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << "mean,variance,second_moment\n" << std::setprecision(12);
  for (const auto& p : pts) {
    double var = p.value;
    if (variance_form.form == FrontierForm::SecondMoment) {
      var = p.value - p.mean * p.mean;
    }
    os << p.mean << ',' << var << ',' << var + p.mean * p.mean << '\n';
  }
  os.flags(old_flags);
  os.precision(old_prec);
}

}  // namespace qhedge
