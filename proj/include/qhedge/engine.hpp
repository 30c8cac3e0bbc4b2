#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "qhedge/market.hpp"
#include "qhedge/numeric.hpp"
#include "qhedge/qp.hpp"
#include "qhedge/subspace.hpp"

namespace qhedge {

// All portfolios are row vectors of dollar amounts written as Vector; the
// constraint "fully invested at cost w" reads pi . 1 = w.

/// Minimum-norm minimizer of a c a' - 2 a b over a . 1 = -1.
struct Adjustment {
  Vector a;
  /// Null(c) ∩ Null(1'): null strategies; a + z is optimal for every z here.
  SubspaceBasis null_basis;
  /// Minimal value a c a' - 2 a b.
  double value = 0.0;
  /// p = (m c m)^+ with m = I - 1 1'/d.
  Matrix p;
};

/// Throws LocalArbitrage (with the descent direction) when b ∉ Ran(c) + Ran(1).
Adjustment adjustment(const Vector& b, const Matrix& c, const NumericContext& ctx = default_context());

enum class ExplicitBranch {
  /// 1 ∈ Ran(c): formulas with c^+ and the weight 1'c^+ / 1'c^+1.
  OnesInRange,
  /// 1 ∉ Ran(c): an instantaneously risk-free fully invested portfolio exists.
  RiskFree,
};

/// Adjustment through the range-split explicit formulas.
struct ExplicitAdjustment {
  Vector a;
  /// Fully invested weight w such that the pure hedge is
  /// xi = c^{VS}c^+ + (V - c^{VS}c^+ 1) w.
  Vector weight;
  ExplicitBranch branch = ExplicitBranch::OnesInRange;
  /// Risk-free fully invested portfolio (RiskFree branch only).
  std::optional<Vector> alpha;
  /// Its rate of return alpha . b (RiskFree branch only).
  std::optional<double> riskfree_rate;
};

ExplicitAdjustment adjustment_explicit(const Vector& b, const Matrix& c,
                                       const NumericContext& ctx = default_context());

/// Pure hedge from the explicit representation.
Vector explicit_pure_hedge(const ExplicitAdjustment& adj, const Matrix& c, const Vector& c_sv,
                           double v_minus, const NumericContext& ctx = default_context());

/// Pure hedge: minimum-norm minimizer of xi c xi' - 2 xi c_sv over xi . 1 = v_minus.
QpSolution pure_hedge(const Matrix& c, const Vector& c_sv, double v_minus,
                      const NumericContext& ctx = default_context());

struct MyopicPortfolio {
  /// zeta = (1'/1'1)(I - c p); zeta . 1 = 1.
  Vector zeta;
  /// zeta c zeta'.
  double variance = 0.0;
};

/// Minimum-norm fully invested portfolio minimizing pi c pi'.
MyopicPortfolio myopic_minvar(const Matrix& c, const NumericContext& ctx = default_context());

/// Hedge coefficients on one time step or one tree node.
struct StepCoefficients {
  Vector a;
  Vector xi;
  Vector zeta;
  std::optional<double> riskfree_rate;
};

/// L, V(H), eps^2(H) at t = 0.
struct RootValues {
  double L = 1.0;
  double V = 0.0;
  double eps2 = 0.0;
};

/// Minimal total error L_0 (v - V_0)^2 + eps_0^2(H).
double hedging_error(const RootValues& root, double v);

struct ValueProcesses {
  std::vector<double> L;
  std::vector<double> V;
  std::vector<double> eps2;
};

/// Deterministic solution for H = 1 in IID or PII models.
struct ClosedFormSolution {
  /// Grid 0 = t_0 < ... < t_N = T: integer periods (IID) or segment ends (PII).
  std::vector<double> times;
  /// L, V(1), eps^2(1) on the grid.
  ValueProcesses values;
  /// Step i covers (t_i, t_{i+1}]; xi is the pure hedge at t_i.
  std::vector<StepCoefficients> steps;
  /// Per-step scalars a.b, a c a', b' p b and zeta c zeta'.
  std::vector<double> ab, aca, bpb, zeta_variance;

  RootValues root() const {
    return {values.L.front(), values.V.front(), values.eps2.front()};
  }
};

ClosedFormSolution closed_form_values(const IidModel& model,
                                      const NumericContext& ctx = default_context());
ClosedFormSolution closed_form_values(const PiiModel& model,
                                      const NumericContext& ctx = default_context());

/// L(t), V_t(1), eps_t^2(1) at an arbitrary t in [0, T] of a PII model.
RootValues pii_values_at(const PiiModel& model, const ClosedFormSolution& sol, double t);

/// Per-node solution of the backward induction on a tree.
struct NodeHedge {
  double L = 1.0;
  double V = 0.0;
  double eps2 = 0.0;
  /// Empty on terminal nodes.
  StepCoefficients coeffs;
  SubspaceBasis null_basis;
};

struct TreeHedge {
  std::vector<NodeHedge> nodes;

  RootValues root() const { return {nodes.front().L, nodes.front().V, nodes.front().eps2}; }
};

/// Optional perturbations inside the optimal sets: the callbacks receive the
/// node index and its null-strategy basis and return a vector added to a / xi.
struct TreeBackwardOptions {
  std::function<Vector(std::size_t, const SubspaceBasis&)> a_shift;
  std::function<Vector(std::size_t, const SubspaceBasis&)> xi_shift;
};

/// Backward induction with next-step L-weighted characteristics
/// b* = E[L+ R]/E[L+], c* = E[L+ R R']/E[L+] (R simple returns).
TreeHedge tree_backward(const FiniteTree& tree, const Claim& claim,
                        const NumericContext& ctx = default_context(),
                        const TreeBackwardOptions& options = {});

/// Holdings and wealth along one path; holdings[t] is held over step t and
/// wealth has one more entry than holdings.
struct StrategyPath {
  std::vector<Vector> holdings;
  std::vector<double> wealth;
};

/// Coefficients of the feedback law for one step: pi = xi + (V - w) a.
struct FeedbackStep {
  Vector a;
  Vector xi;
  double v_start = 0.0;
};

/// Runs the self-financing feedback strategy over simple returns.
StrategyPath feedback_strategy(const std::vector<FeedbackStep>& plan, double v,
                               const std::vector<Vector>& returns);
/// Along a root-to-leaf node path of a tree.
StrategyPath feedback_strategy(const FiniteTree& tree, const TreeHedge& hedge, double v,
                               const std::vector<std::size_t>& path);
/// IID model with constant claim h and realized per-period returns.
StrategyPath feedback_strategy(const ClosedFormSolution& sol, double h, double v,
                               const std::vector<Vector>& returns);

/// The feedback strategy evaluated on every node of a tree.
struct TreeStrategy {
  std::vector<double> wealth;
  /// Dollar holdings on non-terminal nodes (empty vector on terminals).
  std::vector<Vector> dollar_holdings;
  /// Share holdings pi / S on non-terminal nodes.
  std::vector<Vector> share_holdings;
};

TreeStrategy feedback_on_tree(const FiniteTree& tree, const TreeHedge& hedge, double v);

}  // namespace qhedge
