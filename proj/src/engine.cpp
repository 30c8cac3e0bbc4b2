#include "qhedge/engine.hpp"

#include <cmath>
#include <string>

#include "qhedge/errors.hpp"
#include "qhedge/pinv.hpp"

namespace qhedge {

namespace {

Matrix ones_row(Eigen::Index d) { return Matrix::Ones(1, d); }

Vector scalar_vector(double x) { return Vector::Constant(1, x); }

void require_pair(const Vector& b, const Matrix& c, const char* op) {
  if (b.size() == 0 || c.rows() != b.size() || c.cols() != b.size()) {
    throw InvalidInput(std::string(op) + ": b has size " + std::to_string(b.size()) +
                       " but c is " + std::to_string(c.rows()) + "x" + std::to_string(c.cols()));
  }
  require_finite(b, "b");
  require_finite(c, "c");
}

Matrix centering(Eigen::Index d) {
  return Matrix::Identity(d, d) - Matrix::Constant(d, d, 1.0 / static_cast<double>(d));
}

// (m c m)^+ with m the orthogonal projector onto Null(1').
Matrix centered_pinv(const Matrix& c, const NumericContext& ctx) {
  const Matrix m = centering(c.rows());
  return pinv(m * c * m, ctx, c.norm());
}

[[noreturn]] void throw_arbitrage(const std::string& where, const UnboundedProblem& e) {
  throw LocalArbitrage(where + "local no-arbitrage condition b ∈ Ran(c) + Ran(1) is violated (" +
                       e.what() + ")");
}

}  // namespace

Adjustment adjustment(const Vector& b, const Matrix& c, const NumericContext& ctx) {
  require_pair(b, c, "adjustment");
  const Eigen::Index d = b.size();
  Adjustment out;
  try {
    const QpProblem problem(c, b, ones_row(d), scalar_vector(-1.0), ctx);
    QpSolution sol = solve(problem, ctx);
    out.a = std::move(sol.x_hat);
    out.value = sol.value;
    out.null_basis = std::move(sol.null_basis);
  } catch (const UnboundedProblem& e) {
    throw_arbitrage("", e);
  }
  out.p = centered_pinv(c, ctx);
  return out;
}

ExplicitAdjustment adjustment_explicit(const Vector& b, const Matrix& c,
                                       const NumericContext& ctx) {
  require_pair(b, c, "adjustment_explicit");
  if (!check_local_na(b, c, TimeMode::Discrete, ctx)) {
    throw LocalArbitrage("local no-arbitrage condition b ∈ Ran(c) + Ran(1) is violated");
  }
  const Eigen::Index d = b.size();
  const Vector ones = Vector::Ones(d);
  const Matrix c_pinv = pinv(c, ctx);

  ExplicitAdjustment out;
  if (SubspaceBasis::range(c, ctx).contains(ones, ctx)) {
    out.branch = ExplicitBranch::OnesInRange;
    const Vector row = c_pinv * ones;
    out.weight = row / ones.dot(row);
    const Vector bc = c_pinv * b;
    out.a = bc - (1.0 + bc.dot(ones)) * out.weight;
  } else {
    out.branch = ExplicitBranch::RiskFree;
    const Matrix riskless = Matrix::Identity(d, d) - c * c_pinv;
    const Vector row = riskless.transpose() * ones;
    const Vector alpha = row / ones.dot(row);
    const double r = alpha.dot(b);
    const Vector excess = c_pinv * (b - r * ones);
    out.a = excess - (1.0 + excess.dot(ones)) * alpha;
    out.weight = alpha;
    out.alpha = alpha;
    out.riskfree_rate = r;
  }
  return out;
}

Vector explicit_pure_hedge(const ExplicitAdjustment& adj, const Matrix& c, const Vector& c_sv,
                           double v_minus, const NumericContext& ctx) {
  const Vector track = pinv(c, ctx) * c_sv;
  return track + (v_minus - track.sum()) * adj.weight;
}

QpSolution pure_hedge(const Matrix& c, const Vector& c_sv, double v_minus,
                      const NumericContext& ctx) {
  require_pair(c_sv, c, "pure_hedge");
  const QpProblem problem(c, c_sv, ones_row(c.rows()), scalar_vector(v_minus), ctx);
  return solve(problem, ctx);
}

MyopicPortfolio myopic_minvar(const Matrix& c, const NumericContext& ctx) {
  if (c.rows() == 0 || c.rows() != c.cols()) {
    throw InvalidInput("myopic_minvar: c must be square and non-empty");
  }
  require_finite(c, "c");
  const Eigen::Index d = c.rows();
  const Matrix p = centered_pinv(c, ctx);
  MyopicPortfolio out;
  out.zeta = (Matrix::Identity(d, d) - p * c) * Vector::Ones(d) / static_cast<double>(d);
  out.variance = out.zeta.dot(c * out.zeta);
  return out;
}

double hedging_error(const RootValues& root, double v) {
  const double gap = v - root.V;
  return root.L * gap * gap + root.eps2;
}

ClosedFormSolution closed_form_values(const IidModel& model, const NumericContext& ctx) {
  const int periods = model.periods();
  const LocalCharacteristics ch = log_characteristics(model, 1);
  const Adjustment adj = adjustment(ch.b, ch.c, ctx);
  const ExplicitAdjustment expl = adjustment_explicit(ch.b, ch.c, ctx);
  const MyopicPortfolio myopic = myopic_minvar(ch.c, ctx);

  const double ab = adj.a.dot(ch.b);
  const double aca = adj.a.dot(ch.c * adj.a);
  const double bpb = ch.b.dot(adj.p * ch.b);
  const double growth = 1.0 - 2.0 * ab + aca;
  const double tracking = (1.0 - ab) / growth;
  const double residual = 1.0 - bpb - (1.0 - ab) * (1.0 - ab) / growth;

  ClosedFormSolution out;
  const auto n = static_cast<std::size_t>(periods) + 1;
  out.values.L.resize(n);
  out.values.V.resize(n);
  out.values.eps2.assign(n, 0.0);
  for (int t = 0; t <= periods; ++t) {
    out.times.push_back(static_cast<double>(t));
    out.values.L[t] = std::pow(growth, periods - t);
    out.values.V[t] = std::pow(tracking, periods - t);
  }
  for (int t = periods - 1; t >= 0; --t) {
    const double lv2 = out.values.L[t + 1] * out.values.V[t + 1] * out.values.V[t + 1];
    out.values.eps2[t] = out.values.eps2[t + 1] + residual * lv2;
  }
  for (int t = 0; t < periods; ++t) {
    StepCoefficients step;
    step.a = adj.a;
    step.zeta = myopic.zeta;
    step.riskfree_rate = expl.riskfree_rate;
    const double dv = out.values.V[t + 1] - out.values.V[t];
    step.xi = pure_hedge(ch.c, ch.b * dv, out.values.V[t], ctx).x_hat;
    out.steps.push_back(std::move(step));
    out.ab.push_back(ab);
    out.aca.push_back(aca);
    out.bpb.push_back(bpb);
    out.zeta_variance.push_back(myopic.variance);
  }
  return out;
}

namespace {

// Integral over an interval of length dt ending at t1 of exp(-k (t1 - s)) ds.
double discounted_length(double k, double dt) {
  if (std::abs(k * dt) < 1e-300) {
    return dt;
  }
  return -std::expm1(-k * dt) / k;
}

}  // namespace

ClosedFormSolution closed_form_values(const PiiModel& model, const NumericContext& ctx) {
  const auto& segs = model.segments();
  const std::size_t n = segs.size();
  ClosedFormSolution out;
  out.times.resize(n + 1);
  out.values.L.assign(n + 1, 1.0);
  out.values.V.assign(n + 1, 1.0);
  out.values.eps2.assign(n + 1, 0.0);
  out.steps.resize(n);
  out.ab.resize(n);
  out.aca.resize(n);
  out.bpb.resize(n);
  out.zeta_variance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.times[i] = model.segment_start(i);
  }
  out.times[n] = model.horizon();

  for (std::size_t i = n; i-- > 0;) {
    const PiiSegment& s = segs[i];
    const Adjustment adj = adjustment(s.b, s.c, ctx);
    const ExplicitAdjustment expl = adjustment_explicit(s.b, s.c, ctx);
    const MyopicPortfolio myopic = myopic_minvar(s.c, ctx);
    const double ab = adj.a.dot(s.b);
    const double aca = adj.a.dot(s.c * adj.a);
    const double dt = s.duration;

    const double l1 = out.values.L[i + 1];
    const double lv1 = l1 * out.values.V[i + 1];
    const double lv2_1 = lv1 * out.values.V[i + 1];
    const double l0 = l1 * std::exp(dt * (aca - 2.0 * ab));
    const double lv0 = lv1 * std::exp(-dt * ab);
    out.values.L[i] = l0;
    out.values.V[i] = lv0 / l0;
    out.values.eps2[i] =
        out.values.eps2[i + 1] + myopic.variance * lv2_1 * discounted_length(aca, dt);

    StepCoefficients step;
    step.a = adj.a;
    step.zeta = myopic.zeta;
    step.xi = out.values.V[i] * myopic.zeta;
    step.riskfree_rate = expl.riskfree_rate;
    out.steps[i] = std::move(step);
    out.ab[i] = ab;
    out.aca[i] = aca;
    out.bpb[i] = s.b.dot(adj.p * s.b);
    out.zeta_variance[i] = myopic.variance;
  }
  return out;
}

RootValues pii_values_at(const PiiModel& model, const ClosedFormSolution& sol, double t) {
  const std::size_t i = model.segment_at(t);
  const double dt = sol.times[i + 1] - t;
  const double l1 = sol.values.L[i + 1];
  const double v1 = sol.values.V[i + 1];
  const double l = l1 * std::exp(dt * (sol.aca[i] - 2.0 * sol.ab[i]));
  const double lv = l1 * v1 * std::exp(-dt * sol.ab[i]);
  const double eps2 = sol.values.eps2[i + 1] +
                      sol.zeta_variance[i] * l1 * v1 * v1 * discounted_length(sol.aca[i], dt);
  return {l, lv / l, eps2};
}

TreeHedge tree_backward(const FiniteTree& tree, const Claim& claim, const NumericContext& ctx,
                        const TreeBackwardOptions& options) {
  claim.validate_for(tree);
  const Eigen::Index d = tree.assets();
  TreeHedge out;
  out.nodes.resize(tree.size());

  for (std::size_t i = tree.size(); i-- > 0;) {
    const TreeNode& node = tree.node(i);
    NodeHedge& h = out.nodes[i];
    if (node.terminal()) {
      h.L = 1.0;
      h.V = claim.at(tree, i);
      h.eps2 = 0.0;
      h.null_basis = SubspaceBasis(d);
      continue;
    }
    const std::string where = "node '" + node.id + "': ";
    const std::size_t m = node.branches.size();
    std::vector<Vector> returns(m);
    std::vector<double> weight(m);  // p_k * L_k
    double mean_l = 0.0;
    double mean_eps = 0.0;
    Vector b_star = Vector::Zero(d);
    Matrix c_star = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < m; ++k) {
      const auto& br = node.branches[k];
      returns[k] = tree.gross_return(i, k).array() - 1.0;
      weight[k] = br.prob * out.nodes[br.child].L;
      mean_l += weight[k];
      mean_eps += br.prob * out.nodes[br.child].eps2;
      b_star += weight[k] * returns[k];
      c_star += weight[k] * returns[k] * returns[k].transpose();
    }
    b_star /= mean_l;
    c_star /= mean_l;

    // Square-root form of both one-step programs, W = diag(sqrt(p L+)) R':
    // E[L+] (a c* a' - 2 a b*) = |W a - sqrt(p L+)|^2 - E[L+], and the pure
    // hedge minimizes |W xi - sqrt(p L+)(V+ - V)|^2.
    // R = G - 1 carries rounding error relative to G, so ranks are judged
    // against the weighted gross returns.
    const auto mm = static_cast<Eigen::Index>(m);
    Matrix w_rows(mm, d);
    Vector sqrt_w(mm);
    double scale = 0.0;
    for (Eigen::Index k = 0; k < mm; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      sqrt_w(k) = std::sqrt(weight[kk]);
      w_rows.row(k) = sqrt_w(k) * returns[kk].transpose();
      scale += weight[kk] * (returns[kk].array() + 1.0).matrix().squaredNorm();
    }
    scale = ctx.tree_data_ulps * std::sqrt(scale);
    const Matrix ones_row = Matrix::Ones(1, d);
    Matrix rows(mm + 1, d);
    rows << w_rows, ones_row;
    SubspaceBasis null_basis = SubspaceBasis::null(rows, ctx, scale);
    Vector a = constrained_lsq(w_rows, sqrt_w, ones_row, -Vector::Ones(1), ctx, scale);
    if (options.a_shift) {
      a += options.a_shift(i, null_basis);
    }

    double l = 0.0;
    double lv = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double gain = 1.0 - a.dot(returns[k]);
      l += weight[k] * gain * gain;
      lv += weight[k] * gain * out.nodes[node.branches[k].child].V;
    }
    if (!(l > 0.0)) {
      throw LocalArbitrage(where + "opportunity process is not positive (a fully invested "
                                   "portfolio pays zero in every state)");
    }
    const double v = lv / l;

    Vector target(mm);
    for (Eigen::Index k = 0; k < mm; ++k) {
      target(k) = sqrt_w(k) * (out.nodes[node.branches[static_cast<std::size_t>(k)].child].V - v);
    }
    Vector xi = constrained_lsq(w_rows, target, ones_row, Vector::Constant(1, v), ctx, scale);
    if (options.xi_shift) {
      xi += options.xi_shift(i, null_basis);
    }

    double residual = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double miss = xi.dot(returns[k]) - (out.nodes[node.branches[k].child].V - v);
      residual += weight[k] * miss * miss;
    }

    h.L = l;
    h.V = v;
    h.eps2 = mean_eps + residual;
    h.coeffs.a = std::move(a);
    h.coeffs.xi = std::move(xi);
    h.coeffs.zeta = myopic_minvar(c_star, ctx).zeta;
    h.coeffs.riskfree_rate = adjustment_explicit(b_star, c_star, ctx).riskfree_rate;
    h.null_basis = std::move(null_basis);
  }
  return out;
}

StrategyPath feedback_strategy(const std::vector<FeedbackStep>& plan, double v,
                               const std::vector<Vector>& returns) {
  if (plan.size() != returns.size()) {
    throw InvalidInput("feedback_strategy: " + std::to_string(plan.size()) +
                       " coefficient steps but " + std::to_string(returns.size()) + " returns");
  }
  StrategyPath path;
  path.wealth.push_back(v);
  double w = v;
  for (std::size_t t = 0; t < plan.size(); ++t) {
    const FeedbackStep& s = plan[t];
    if (s.a.size() != returns[t].size() || s.xi.size() != returns[t].size()) {
      throw InvalidInput("feedback_strategy: dimension mismatch at step " + std::to_string(t));
    }
    Vector pi = s.xi + (s.v_start - w) * s.a;
    w += pi.dot(returns[t]);
    path.holdings.push_back(std::move(pi));
    path.wealth.push_back(w);
  }
  return path;
}

StrategyPath feedback_strategy(const FiniteTree& tree, const TreeHedge& hedge, double v,
                               const std::vector<std::size_t>& path) {
  if (hedge.nodes.size() != tree.size()) {
    throw InvalidInput("feedback_strategy: hedge does not belong to this tree");
  }
  if (path.empty() || path.front() != tree.root()) {
    throw InvalidInput("feedback_strategy: path must start at the root");
  }
  std::vector<FeedbackStep> plan;
  std::vector<Vector> returns;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) {
    const TreeNode& n = tree.node(path[t]);
    std::size_t k = 0;
    while (k < n.branches.size() && n.branches[k].child != path[t + 1]) {
      ++k;
    }
    if (k == n.branches.size()) {
      throw InvalidInput("feedback_strategy: node '" + tree.node(path[t + 1]).id +
                         "' is not a child of '" + n.id + "'");
    }
    const NodeHedge& h = hedge.nodes[path[t]];
    plan.push_back({h.coeffs.a, h.coeffs.xi, h.V});
    returns.push_back(tree.gross_return(path[t], k).array() - 1.0);
  }
  if (!tree.node(path.back()).terminal()) {
    throw InvalidInput("feedback_strategy: path must end on a terminal node");
  }
  return feedback_strategy(plan, v, returns);
}

StrategyPath feedback_strategy(const ClosedFormSolution& sol, double h, double v,
                               const std::vector<Vector>& returns) {
  std::vector<FeedbackStep> plan;
  for (std::size_t t = 0; t < sol.steps.size(); ++t) {
    plan.push_back({sol.steps[t].a, h * sol.steps[t].xi, h * sol.values.V[t]});
  }
  return feedback_strategy(plan, v, returns);
}

TreeStrategy feedback_on_tree(const FiniteTree& tree, const TreeHedge& hedge, double v) {
  if (hedge.nodes.size() != tree.size()) {
    throw InvalidInput("feedback_on_tree: hedge does not belong to this tree");
  }
  TreeStrategy out;
  out.wealth.assign(tree.size(), 0.0);
  out.dollar_holdings.assign(tree.size(), Vector());
  out.share_holdings.assign(tree.size(), Vector());
  out.wealth[0] = v;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    if (n.terminal()) {
      continue;
    }
    const NodeHedge& h = hedge.nodes[i];
    Vector pi = h.coeffs.xi + (h.V - out.wealth[i]) * h.coeffs.a;
    for (std::size_t k = 0; k < n.branches.size(); ++k) {
      const Vector r = tree.gross_return(i, k).array() - 1.0;
      out.wealth[n.branches[k].child] = out.wealth[i] + pi.dot(r);
    }
    out.share_holdings[i] = pi.cwiseQuotient(n.prices);
    out.dollar_holdings[i] = std::move(pi);
  }
  return out;
}

}  // namespace qhedge
