#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qhedge/engine.hpp"

namespace qhedge {

/// Time-0 values (L_0, V_0(1), eps_0^2(1)) of a market.
struct FrontierTriple {
  double L0 = 1.0;
  double V0_1 = 0.0;
  double eps2_0_1 = 0.0;

  static FrontierTriple from(const RootValues& root) { return {root.L, root.V, root.eps2}; }
  /// eps^2(0, 1) = L0 V0^2 + eps2: minimal error when hedging H = 1 from zero wealth.
  double zero_claim_error() const { return L0 * V0_1 * V0_1 + eps2_0_1; }
};

enum class FrontierForm { SecondMoment, Variance };

struct FrontierPoint {
  double mean;
  double value;
};

/// value = intercept + slope (mean - center)^2.
struct FrontierCurve {
  FrontierForm form = FrontierForm::SecondMoment;
  double intercept = 0.0;
  double slope = 0.0;
  double center = 0.0;
  FrontierTriple triple;
  std::vector<FrontierPoint> points;

  double evaluate(double mean) const;
};

/// Second-moment and variance forms of the weakly efficient frontier of
/// unit-cost fully invested strategies.
std::pair<FrontierCurve, FrontierCurve> frontier_coeffs(const FrontierTriple& triple);

struct EfficientThreshold {
  double lambda_min;
  double mean_min;
};

/// Smallest lambda for which phi(1,0) + lambda phi(0,1) is efficient.
EfficientThreshold efficient_threshold(const FrontierTriple& triple);

/// n equally spaced means in [mean_lo, mean_hi]; also stored in curve.points.
std::vector<FrontierPoint> sample_frontier(FrontierCurve& curve, double mean_lo, double mean_hi,
                                           int n);

/// CSV with header mean,variance,second_moment at 12 significant digits.
void write_frontier_csv(std::ostream& os, const FrontierCurve& variance_form, double mean_lo,
                        double mean_hi, int n);

}  // namespace qhedge
