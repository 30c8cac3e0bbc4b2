#include "qhedge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "qhedge/config.hpp"
#include "qhedge/engine.hpp"
#include "qhedge/errors.hpp"
#include "qhedge/frontier.hpp"
#include "qhedge/oracle.hpp"
#include "qhedge/pinv.hpp"
#include "qhedge/qp.hpp"
#include "qhedge/simulate.hpp"

namespace qhedge {

namespace {

struct RunConfig {
  std::string model;
  std::optional<std::string> claim;
  std::optional<double> wealth;
  std::optional<std::string> out;
  std::uint64_t seed = 1;
  std::uint64_t paths = 100000;
  double tol = 1e-9;
  std::optional<int> numeraire;
  double step = 0.01;
};

constexpr int kFrontierSamples = 101;

std::string num(double x) {
  std::ostringstream ss;
  ss << std::setprecision(12) << x;
  return ss.str();
}

std::string vec(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s += (i ? ", " : "") + num(v(i));
  }
  return s + "]";
}

std::string csv_vec(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s += "," + num(v(i));
  }
  return s;
}

// Buffers file output so it is written once at the end.
class Output {
 public:
  explicit Output(std::optional<std::string> path) : path_(std::move(path)) {}
  std::ostringstream& stream() { return buf_; }
  bool enabled() const { return path_.has_value(); }
  void flush(std::ostream& out) {
    if (!path_) {
      return;
    }
    std::ofstream f(*path_, std::ios::binary);
    if (!f) {
      throw InvalidInput("cannot write '" + *path_ + "'");
    }
    f << buf_.str();
    out << "wrote " << *path_ << "\n";
  }

 private:
  std::optional<std::string> path_;
  std::ostringstream buf_;
};

double constant_claim(const Claim& claim) {
  if (!claim.is_constant()) {
    throw InvalidInput("IID and PII models take a constant claim only");
  }
  return claim.constant_value();
}

void print_frontier(const FrontierTriple& triple, const RunConfig& cfg, std::ostream& out) {
  out << "L0 = " << num(triple.L0) << "\n";
  out << "V0(1) = " << num(triple.V0_1) << "\n";
  out << "L0*V0(1) = " << num(triple.L0 * triple.V0_1) << "\n";
  out << "eps0^2(1) = " << num(triple.eps2_0_1) << "\n";
  const auto [second, variance] = frontier_coeffs(triple);
  out << "second-moment frontier: E[R^2] = " << num(second.intercept) << " + "
      << num(second.slope) << " (E[R] - " << num(second.center) << ")^2\n";
  out << "variance frontier: Var(R) = " << num(variance.intercept) << " + " << num(variance.slope)
      << " (E[R] - " << num(variance.center) << ")^2\n";
  try {
    const EfficientThreshold th = efficient_threshold(triple);
    out << "efficient threshold: lambda_min = " << num(th.lambda_min)
        << ", mean_min = " << num(th.mean_min) << "\n";
  } catch (const Error& e) {
    out << "efficient threshold: " << e.what() << "\n";
  }
  Output file(cfg.out);
  if (file.enabled()) {
    const double half = std::max(1.0, std::abs(variance.center));
    write_frontier_csv(file.stream(), variance, variance.center - half, variance.center + half,
                       kFrontierSamples);
    file.flush(out);
  }
}

int cmd_frontier(const RunConfig& cfg, std::ostream& out) {
  const RunInputs in = load_config(cfg.model);
  FrontierTriple triple;
  switch (in.model.kind) {
    case ModelKind::Iid: {
      const ClosedFormSolution sol = closed_form_values(*in.model.iid);
      const LocalCharacteristics ch = log_characteristics(*in.model.iid, 1);
      const ExplicitAdjustment expl = adjustment_explicit(ch.b, ch.c);
      const Adjustment adj = adjustment(ch.b, ch.c);
      out << "a = " << vec(adj.a) << "\n";
      out << "p = [";
      for (Eigen::Index r = 0; r < adj.p.rows(); ++r) {
        out << (r ? ", " : "") << vec(adj.p.row(r).transpose());
      }
      out << "]\n";
      out << "b'pb = " << num(sol.bpb.front()) << "\n";
      out << "1 - ab = " << num(1.0 - sol.ab.front()) << "\n";
      out << "1 - 2ab + aca' = " << num(1.0 - 2.0 * sol.ab.front() + sol.aca.front()) << "\n";
      out << "explicit branch = "
          << (expl.branch == ExplicitBranch::OnesInRange ? "ones-in-range" : "risk-free") << "\n";
      triple = FrontierTriple::from(sol.root());
      break;
    }
    case ModelKind::Pii: {
      const ClosedFormSolution sol = closed_form_values(*in.model.pii);
      for (std::size_t i = 0; i < sol.steps.size(); ++i) {
        out << "segment " << i << ": a = " << vec(sol.steps[i].a)
            << ", zeta = " << vec(sol.steps[i].zeta) << ", aca' = " << num(sol.aca[i])
            << ", zeta c zeta' = " << num(sol.zeta_variance[i]) << ", ab = " << num(sol.ab[i])
            << "\n";
      }
      triple = FrontierTriple::from(sol.root());
      break;
    }
    case ModelKind::Tree: {
      const TreeHedge h = tree_backward(*in.model.tree, Claim::constant(1.0));
      triple = FrontierTriple::from(h.root());
      break;
    }
  }
  print_frontier(triple, cfg, out);
  return kExitOk;
}

int cmd_hedge(const RunConfig& cfg, std::ostream& out) {
  const RunInputs in = load_config(cfg.model);
  const Claim claim = resolve_claim(in, cfg.claim);
  const double v = cfg.wealth.value_or(in.wealth.value_or(0.0));
  Output file(cfg.out);
  std::ostream& table = file.enabled() ? static_cast<std::ostream&>(file.stream()) : out;
  RootValues root;
  if (in.model.kind == ModelKind::Tree) {
    const FiniteTree& tree = *in.model.tree;
    const TreeHedge h = tree_backward(tree, claim);
    table << "node,time,L,V,eps2";
    for (Eigen::Index j = 0; j < tree.assets(); ++j) {
      table << ",a" << j;
    }
    for (Eigen::Index j = 0; j < tree.assets(); ++j) {
      table << ",xi" << j;
    }
    table << "\n";
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const NodeHedge& n = h.nodes[i];
      table << tree.node(i).id << "," << tree.node(i).time << "," << num(n.L) << "," << num(n.V)
            << "," << num(n.eps2);
      if (tree.node(i).terminal()) {
        table << std::string(2 * static_cast<std::size_t>(tree.assets()), ',');
      } else {
        table << csv_vec(n.coeffs.a) << csv_vec(n.coeffs.xi);
      }
      table << "\n";
    }
    root = h.root();
  } else {
    const double hc = constant_claim(claim);
    const ClosedFormSolution sol = in.model.kind == ModelKind::Iid
                                       ? closed_form_values(*in.model.iid)
                                       : closed_form_values(*in.model.pii);
    const Eigen::Index d = sol.steps.front().a.size();
    table << "time,L,V,eps2";
    for (Eigen::Index j = 0; j < d; ++j) {
      table << ",a" << j;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      table << ",xi" << j;
    }
    table << "\n";
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
      table << num(sol.times[i]) << "," << num(sol.values.L[i]) << ","
            << num(hc * sol.values.V[i]) << "," << num(hc * hc * sol.values.eps2[i]);
      if (i < sol.steps.size()) {
        table << csv_vec(sol.steps[i].a) << csv_vec(hc * sol.steps[i].xi);
      } else {
        table << std::string(2 * static_cast<std::size_t>(d), ',');
      }
      table << "\n";
    }
    root = {sol.root().L, hc * sol.root().V, hc * hc * sol.root().eps2};
  }
  out << "L0 = " << num(root.L) << "\n";
  out << "V0(H) = " << num(root.V) << "\n";
  out << "eps0^2(H) = " << num(root.eps2) << "\n";
  out << "wealth = " << num(v) << "\n";
  out << "hedging error = " << num(hedging_error(root, v)) << "\n";
  file.flush(out);
  return kExitOk;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  const RunInputs in = load_config(cfg.model);
  if (in.model.kind != ModelKind::Tree) {
    throw InvalidInput("oracle needs a tree model");
  }
  const FiniteTree& tree = *in.model.tree;
  const Claim claim = resolve_claim(in, cfg.claim);
  const double v = cfg.wealth.value_or(in.wealth.value_or(0.0));
  bool ok = true;

  const DpSolution dp = dp_solve(tree, claim, v);
  const TreeHedge engine = tree_backward(tree, claim);
  double gap = 0.0;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    gap = std::max({gap, std::abs(engine.nodes[i].L - dp.values[i].ell),
                    std::abs(engine.nodes[i].V - dp.values[i].v),
                    std::abs(engine.nodes[i].eps2 - dp.values[i].e)});
  }
  const double engine_obj = hedging_error(engine.root(), v);
  gap = std::max(gap, std::abs(engine_obj - dp.objective));
  out << "dp objective = " << num(dp.objective) << "\n";
  out << "engine objective = " << num(engine_obj) << "\n";
  const bool dp_ok = gap <= cfg.tol;
  ok = ok && dp_ok;
  out << (dp_ok ? "PASS" : "FAIL") << " engine vs dp: max discrepancy " << num(gap) << "\n";

  std::vector<Eigen::Index> indices;
  if (cfg.numeraire) {
    indices.push_back(*cfg.numeraire);
  } else {
    for (Eigen::Index j = 0; j < tree.assets(); ++j) {
      if (tree.strictly_positive_asset(j)) {
        indices.push_back(j);
      } else {
        out << "SKIP numeraire " << j << ": numeraire positivity fails\n";
      }
    }
  }
  for (Eigen::Index j : indices) {
    const NumeraireReport rep = numeraire_change_check(tree, claim, j, v);
    const bool pass = rep.passed(cfg.tol);
    ok = ok && pass;
    out << (pass ? "PASS" : "FAIL") << " numeraire " << j
        << (rep.constant_numeraire ? " (constant asset: identical problems)" : "")
        << ": objective " << num(rep.objective) << ", E[X_T^2]*discounted "
        << num(rep.numeraire_second_moment * rep.objective_discounted)
        << ", objective discrepancy " << num(rep.objective_discrepancy)
        << ", holdings discrepancy " << num(rep.holdings_discrepancy)
        << ", wealth discrepancy " << num(rep.wealth_discrepancy) << "\n";
  }
  return ok ? kExitOk : kExitVerification;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const RunInputs in = load_config(cfg.model);
  const Claim claim = resolve_claim(in, cfg.claim);
  const double v = cfg.wealth.value_or(in.wealth.value_or(0.0));
  SimOptions opt;
  opt.n_paths = cfg.paths;
  opt.seed = cfg.seed;
  opt.step = cfg.step;
  SimReport rep;
  RootValues root;
  if (in.model.kind == ModelKind::Tree) {
    const TreeHedge h = tree_backward(*in.model.tree, claim);
    rep = simulate(*in.model.tree, h, claim, v, opt);
    root = h.root();
  } else {
    const double hc = constant_claim(claim);
    if (in.model.kind == ModelKind::Iid) {
      const ClosedFormSolution sol = closed_form_values(*in.model.iid);
      rep = simulate(*in.model.iid, sol, hc, v, opt);
      root = sol.root();
    } else {
      const ClosedFormSolution sol = closed_form_values(*in.model.pii);
      rep = simulate(*in.model.pii, sol, hc, v, opt);
      root = sol.root();
    }
    root = {root.L, hc * root.V, hc * hc * root.eps2};
  }
  for (const auto& w : rep.warnings) {
    out << "warning: " << w << "\n";
  }
  const double analytic = hedging_error(root, v);
  out << "paths = " << rep.n_paths << (rep.exact ? " (enumerated)" : "") << "\n";
  out << "seed = " << rep.seed << "\n";
  out << "mean error = " << num(rep.mean_error) << "\n";
  out << "mean squared error = " << num(rep.mean_sq_error) << "\n";
  out << "standard error = " << num(rep.std_error) << "\n";
  out << "analytic error = " << num(analytic) << "\n";
  if (rep.exact) {
    const double gap = std::abs(rep.mean_sq_error - analytic);
    const bool pass = gap <= cfg.tol * std::max(1.0, analytic);
    out << (pass ? "PASS" : "FAIL") << " enumeration matches analytic error: discrepancy "
        << num(gap) << "\n";
    return pass ? kExitOk : kExitVerification;
  }
  if (rep.std_error > 0.0) {
    out << "z-score = " << num((rep.mean_sq_error - analytic) / rep.std_error) << "\n";
  }
  return kExitOk;
}

int cmd_solve_qp(const RunConfig& cfg, std::ostream& out) {
  const QpConfig qc = load_qp_config(cfg.model);
  const QpProblem p(qc.C, qc.F, qc.A, qc.b);
  if (!check_bounded(p.C(), p.F(), p.A())) {
    const Vector y = unbounded_direction(p.C(), p.F(), p.A());
    throw UnboundedProblem("boundedness fails: F is not in Ran(A') + Ran(C); descent direction " +
                               vec(y),
                           y);
  }
  const QpSolution s = solve(p);
  AltBranch branch{};
  const QpSolution alt = solve_alt(p, default_context(), &branch);
  out << "bounded = true\n";
  out << "x_hat = " << vec(s.x_hat) << "\n";
  out << "value = " << num(s.value) << "\n";
  out << "null space dimension = " << s.null_basis.dim() << "\n";
  out << "alternative branch = "
      << (branch == AltBranch::RangeContained ? "range-contained" : "range-complement") << "\n";
  const double gap = (s.x_hat - alt.x_hat).norm();
  const bool pass = gap <= cfg.tol * std::max(1.0, s.x_hat.norm());
  out << (pass ? "PASS" : "FAIL") << " alternative representation: discrepancy " << num(gap)
      << "\n";
  return pass ? kExitOk : kExitVerification;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--model", cfg.model, "Model (or QP) config file")->required();
  sub->add_option("--claim", cfg.claim, "Claim: number, \"payoff\", or JSON map id -> value");
  sub->add_option("--wealth", cfg.wealth, "Initial wealth");
  sub->add_option("--out", cfg.out, "Output file (CSV)");
  sub->add_option("--seed", cfg.seed, "Simulation seed");
  sub->add_option("--paths", cfg.paths, "Simulation paths");
  sub->add_option("--tol", cfg.tol, "Verification tolerance");
  sub->add_option("--numeraire", cfg.numeraire, "Check only this numeraire asset");
  sub->add_option("--step", cfg.step, "Largest Euler step for PII simulation");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadratic hedging and mean-variance frontiers without a risk-free asset", "qhedge"};
  app.require_subcommand(1);
  RunConfig cfg;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"frontier", "Print (L0, V0(1), eps0^2(1)) and the frontier; --out writes a CSV sample",
       cmd_frontier},
      {"hedge", "Per-node (or per-step) hedge table and total hedging error", cmd_hedge},
      {"oracle", "Compare with dynamic programming and check numeraire invariance", cmd_oracle},
      {"simulate", "Monte Carlo or enumeration of the feedback strategy", cmd_simulate},
      {"solve-qp", "Solve a constrained quadratic program from {\"qp\": {C, F, A, b}}",
       cmd_solve_qp},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, cfg);
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInvalid;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) {
      continue;
    }
    try {
      if (!std::isfinite(cfg.tol) || !(cfg.tol > 0.0)) {
        throw InvalidInput("--tol must be positive and finite");
      }
      if (cfg.wealth && !std::isfinite(*cfg.wealth)) {
        throw InvalidInput("--wealth must be finite");
      }
      return commands[i].run(cfg, out);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitInvalid;
    }
  }
  return kExitInvalid;
}

}  // namespace qhedge
