#pragma once

#include <cstddef>
#include <vector>

#include "qhedge/market.hpp"
#include "qhedge/numeric.hpp"

namespace qhedge {

/// Value function at a node: min future error from wealth w is ell (w - v)^2 + e.
struct DpNodeValue {
  double ell = 1.0;
  double v = 0.0;
  double e = 0.0;

  double at(double w) const { return ell * (w - v) * (w - v) + e; }
};

/// Optimal dollar holdings at a node as an affine function of wealth.
struct AffineRule {
  Vector base;
  Vector slope;

  Vector at(double w) const { return base + w * slope; }
};

struct DpSolution {
  std::vector<DpNodeValue> values;
  /// Empty rules on terminal nodes.
  std::vector<AffineRule> rules;
  /// Forward pass from the initial wealth.
  std::vector<double> wealth;
  std::vector<Vector> dollar_holdings;
  std::vector<Vector> share_holdings;
  double initial_wealth = 0.0;
  double objective = 0.0;
};

/// Exact dynamic programming for min E[(wealth_T - H)^2] over self-financing
/// strategies, directly in terms of gross returns and child value functions.
DpSolution dp_solve(const FiniteTree& tree, const Claim& claim, double v,
                    const NumericContext& ctx = default_context());

struct NumeraireReport {
  Eigen::Index numeraire = 0;
  /// True when the numeraire price is the same on every node.
  bool constant_numeraire = false;
  double objective = 0.0;
  double objective_discounted = 0.0;
  /// E[X_T^2].
  double numeraire_second_moment = 0.0;
  /// |objective - E[X_T^2] objective_discounted| / max(1, objective).
  double objective_discrepancy = 0.0;
  /// Max over nodes of the share-holdings difference after removing null
  /// strategies (zero cost, zero payoff in every child).
  double holdings_discrepancy = 0.0;
  /// Max over nodes of |w - X w_hat|.
  double wealth_discrepancy = 0.0;

  bool passed(double tol) const {
    return objective_discrepancy <= tol && holdings_discrepancy <= tol && wealth_discrepancy <= tol;
  }
};

/// Solves the problem in the original units and after discounting by asset
/// `numeraire` under the X_T^2-weighted measure, and compares.
NumeraireReport numeraire_change_check(const FiniteTree& tree, const Claim& claim,
                                       Eigen::Index numeraire, double v,
                                       const NumericContext& ctx = default_context());

}  // namespace qhedge
