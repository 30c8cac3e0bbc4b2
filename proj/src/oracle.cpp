#include "qhedge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qhedge/errors.hpp"
#include "qhedge/qp.hpp"
#include "qhedge/subspace.hpp"

namespace qhedge {

namespace {

// E[ell+ (pi G - v+)^2 + e+] = |W pi - y|^2 + floor with W = diag(sqrt(p ell+)) G'.
struct NodeLeastSquares {
  Matrix w;
  Vector y;
  double floor = 0.0;
};

NodeLeastSquares child_least_squares(const FiniteTree& tree, std::size_t i,
                                     const std::vector<DpNodeValue>& values) {
  const TreeNode& n = tree.node(i);
  const auto m = static_cast<Eigen::Index>(n.branches.size());
  NodeLeastSquares out{Matrix(m, tree.assets()), Vector(m), 0.0};
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& br = n.branches[static_cast<std::size_t>(k)];
    const DpNodeValue& c = values[br.child];
    const double s = std::sqrt(br.prob * c.ell);
    out.w.row(k) = s * tree.gross_return(i, static_cast<std::size_t>(k)).transpose();
    out.y(k) = s * c.v;
    out.floor += br.prob * c.e;
  }
  return out;
}

}  // namespace

DpSolution dp_solve(const FiniteTree& tree, const Claim& claim, double v,
                    const NumericContext& ctx) {
  if (!std::isfinite(v)) {
    throw InvalidInput("initial wealth must be finite");
  }
  claim.validate_for(tree);
  const std::size_t n = tree.size();
  const Eigen::Index d = tree.assets();
  DpSolution out;
  out.values.resize(n);
  out.rules.resize(n);
  out.initial_wealth = v;
  const Matrix ones = Matrix::Ones(1, d);

  for (std::size_t i = n; i-- > 0;) {
    const TreeNode& node = tree.node(i);
    if (node.terminal()) {
      out.values[i] = {1.0, claim.at(tree, i), 0.0};
      continue;
    }
    // Minimum-norm optimal holdings at wealth 0 and 1 span the affine rule.
    const NodeLeastSquares ls = child_least_squares(tree, i, out.values);
    const double scale = ctx.tree_data_ulps * ls.w.norm();
    const Vector x0 = constrained_lsq(ls.w, ls.y, ones, Vector::Zero(1), ctx, scale);
    const Vector x1 = constrained_lsq(ls.w, ls.y, ones, Vector::Ones(1), ctx, scale);
    const Vector slope = x1 - x0;
    const Vector w_slope = ls.w * slope;
    const double ell = w_slope.squaredNorm();
    if (!(ell > 0.0)) {
      throw LocalArbitrage("node '" + node.id + "': value function is not strictly convex in wealth");
    }
    const double center = -w_slope.dot(ls.w * x0 - ls.y) / ell;
    const double e = (ls.w * (x0 + center * slope) - ls.y).squaredNorm() + ls.floor;
    out.values[i] = {ell, center, e};
    out.rules[i] = {x0, slope};
  }

  out.wealth.assign(n, 0.0);
  out.dollar_holdings.assign(n, Vector());
  out.share_holdings.assign(n, Vector());
  out.wealth[0] = v;
  for (std::size_t i = 0; i < n; ++i) {
    const TreeNode& node = tree.node(i);
    if (node.terminal()) {
      continue;
    }
    Vector pi = out.rules[i].at(out.wealth[i]);
    for (std::size_t k = 0; k < node.branches.size(); ++k) {
      out.wealth[node.branches[k].child] = pi.dot(tree.gross_return(i, k));
    }
    out.share_holdings[i] = pi.cwiseQuotient(node.prices);
    out.dollar_holdings[i] = std::move(pi);
  }
  out.objective = out.values[0].at(v);
  return out;
}

NumeraireReport numeraire_change_check(const FiniteTree& tree, const Claim& claim,
                                       Eigen::Index numeraire, double v,
                                       const NumericContext& ctx) {
  const DiscountedTree dt = discount_tree(tree, numeraire, ctx);
  const Claim hat_claim = discount_claim(tree, claim, numeraire);
  const double x0 = tree.node(0).prices(numeraire);

  const DpSolution plain = dp_solve(tree, claim, v, ctx);
  const DpSolution hat = dp_solve(dt.tree, hat_claim, v / x0, ctx);

  NumeraireReport rep;
  rep.numeraire = numeraire;
  rep.constant_numeraire = true;
  for (const TreeNode& node : tree.nodes()) {
    if (node.prices(numeraire) != x0) {
      rep.constant_numeraire = false;
    }
  }
  rep.objective = plain.objective;
  rep.objective_discounted = hat.objective;
  rep.numeraire_second_moment = dt.numeraire_second_moment;
  rep.objective_discrepancy = std::abs(plain.objective - dt.numeraire_second_moment * hat.objective) /
                              std::max(1.0, std::abs(plain.objective));

  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& node = tree.node(i);
    const auto j = dt.tree.find(node.id);
    if (!j) {
      throw InvalidInput("discounted tree lost node '" + node.id + "'");
    }
    const double x = node.prices(numeraire);
    rep.wealth_discrepancy =
        std::max(rep.wealth_discrepancy,
                 std::abs(plain.wealth[i] - x * hat.wealth[*j]) / std::max(1.0, std::abs(plain.wealth[i])));
    if (node.terminal()) {
      continue;
    }
    // Dollar form of the difference; strip directions with zero cost and zero
    // value in every child.
    const Vector diff = (plain.share_holdings[i] - hat.share_holdings[*j]).cwiseProduct(node.prices);
    Matrix payoff(static_cast<Eigen::Index>(node.branches.size()) + 1, tree.assets());
    payoff.row(0) = Vector::Ones(tree.assets()).transpose();
    for (std::size_t k = 0; k < node.branches.size(); ++k) {
      payoff.row(static_cast<Eigen::Index>(k) + 1) = tree.gross_return(i, k).transpose();
    }
    const SubspaceBasis null_moves =
        SubspaceBasis::null(payoff, ctx, ctx.tree_data_ulps * payoff.norm());
    const Vector kept = diff - null_moves.vectors() * (null_moves.vectors().transpose() * diff);
    rep.holdings_discrepancy =
        std::max(rep.holdings_discrepancy, kept.cwiseQuotient(node.prices).norm() /
                                               std::max(1.0, plain.share_holdings[i].norm()));
  }
  return rep;
}

}  // namespace qhedge
