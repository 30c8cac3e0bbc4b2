#include "doctest.h"
#include "qhedge/engine.hpp"
#include "qhedge/errors.hpp"
#include "qhedge/oracle.hpp"
#include "qhedge/pinv.hpp"
#include "support.hpp"

using namespace qhedge;
using namespace qhedge::testing;

TEST_CASE("Li-Ng closed form") {
  const IidModel m(li_ng_mu(), li_ng_sigma(), 4);
  const ClosedFormSolution sol = closed_form_values(m);
  const Vector a = sol.steps[0].a;
  CHECK(std::abs(a(0) + 6.9144) < 5e-5);
  CHECK(std::abs(a(1) - 1.6238) < 5e-5);
  CHECK(std::abs(a(2) - 4.2907) < 5e-5);
  CHECK(rel_err(sol.bpb[0], 582399.0 / 1632974.0) <= 1e-12);
  CHECK(rel_err(1.0 - sol.ab[0], 3030887.0 / 4082435.0) <= 1e-12);
  CHECK(rel_err(1.0 - 2.0 * sol.ab[0] + sol.aca[0], 14224270253.0 / 16329740000.0) <= 1e-12);
  const RootValues r = sol.root();
  CHECK(rel_err(r.L, 0.57571) < 1e-5);
  CHECK(rel_err(r.L * r.V, 0.30381) < 1e-5);
  CHECK(rel_err(r.eps2, 0.024179) < 2e-5);
  CHECK(sol.values.L.back() == 1.0);
  CHECK(sol.values.V.back() == 1.0);
  CHECK(sol.values.eps2.back() == 0.0);
}

TEST_CASE("iid closed form equals backward induction on the moment-matched tree") {
  for (int periods = 1; periods <= 3; ++periods) {
    const IidModel m(li_ng_mu(), li_ng_sigma(), periods);
    const ClosedFormSolution sol = closed_form_values(m);
    const FiniteTree tree = moment_tree(li_ng_mu(), li_ng_sigma(), periods);
    const TreeHedge h = tree_backward(tree, Claim::constant(1.0));
    CHECK(std::abs(h.root().L - sol.root().L) < 1e-10);
    CHECK(std::abs(h.root().V - sol.root().V) < 1e-10);
    CHECK(std::abs(h.root().eps2 - sol.root().eps2) < 1e-10);
    CHECK((h.nodes[0].coeffs.a - sol.steps[0].a).norm() < 1e-9);
    CHECK((h.nodes[0].coeffs.xi - sol.steps[0].xi).norm() < 1e-9);
  }
}

TEST_CASE("PII example") {
  const PiiModel m({{5.0, pii_b(), pii_c()}});
  const ClosedFormSolution sol = closed_form_values(m);
  const StepCoefficients& s = sol.steps[0];
  const double a_ref[] = {-0.1172, 0.0852, -0.3132, -0.6548};
  const double z_ref[] = {0.1745, -0.0799, 0.3605, 0.5450};
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(s.a(i) - a_ref[i]) < 5e-5);
    CHECK(std::abs(s.zeta(i) - z_ref[i]) < 5e-5);
  }
  CHECK(std::abs(sol.aca[0] - 0.08405358) < 1e-8);
  CHECK(std::abs(sol.zeta_variance[0] - 0.06865944) < 1e-8);
  CHECK(std::abs(sol.ab[0] + 0.03762131) < 1e-8);
  CHECK(std::abs(sol.root().L - 2.21772301) < 1e-8);
  CHECK(std::abs(sol.root().L * sol.root().V - 1.20696211) < 1e-8);
  CHECK(std::abs(sol.root().eps2 - 0.28028620) < 1e-8);
  // zeta c zeta' = a c a' - b' p b, and xi(1) = V(1) zeta.
  CHECK(std::abs(sol.zeta_variance[0] - (sol.aca[0] - sol.bpb[0])) < 1e-12);
  CHECK((s.xi - sol.values.V[0] * s.zeta).norm() < 1e-14);
  CHECK_FALSE(s.riskfree_rate.has_value());
}

TEST_CASE("PII branch A closed forms with invertible c") {
  const Matrix c = pii_c();
  const Vector b = pii_b();
  const Matrix ci = c.inverse();
  const Vector one = Vector::Ones(4);
  const double a1 = one.dot(ci * one);
  const double b1 = b.dot(ci * one);
  const double bb = b.dot(ci * b);
  const PiiModel m({{5.0, b, c}});
  const ClosedFormSolution sol = closed_form_values(m);
  CHECK(sol.root().L == doctest::Approx(std::exp(5.0 * ((1 + b1) * (1 + b1) / a1 - bb))).epsilon(1e-12));
  CHECK(sol.root().V == doctest::Approx(std::exp(-5.0 * (1 + b1) / a1)).epsilon(1e-12));
  CHECK(sol.zeta_variance[0] == doctest::Approx(1.0 / a1).epsilon(1e-12));
  const Vector zeta = ci * one / a1;
  CHECK((sol.steps[0].zeta - zeta).norm() < 1e-10);
}

TEST_CASE("PII branch B: locally risk-free asset") {
  const Vector b = (Vector(2) << 0.03, 0.08).finished();
  Matrix c = Matrix::Zero(2, 2);
  c(1, 1) = 0.04;
  const PiiModel m({{2.0, b, c}});
  const ClosedFormSolution sol = closed_form_values(m);
  CHECK(sol.root().eps2 == doctest::Approx(0.0));
  CHECK(sol.root().V == doctest::Approx(std::exp(-0.03 * 2.0)));
  CHECK(sol.root().L == doctest::Approx(std::exp(2.0 * (0.06 - 0.0025 * 25.0))));
  CHECK(sol.steps[0].a(0) == doctest::Approx(-2.25));
  CHECK(sol.steps[0].a(1) == doctest::Approx(1.25));
  REQUIRE(sol.steps[0].riskfree_rate.has_value());
  CHECK(*sol.steps[0].riskfree_rate == doctest::Approx(0.03));
  const ExplicitAdjustment e = adjustment_explicit(b, c);
  CHECK(e.branch == ExplicitBranch::RiskFree);
  CHECK(e.alpha->isApprox((Vector(2) << 1.0, 0.0).finished()));
}

TEST_CASE("PII values between grid points and segment splitting") {
  const Vector b2 = 0.5 * pii_b();
  const PiiModel one({{2.0, pii_b(), pii_c()}, {3.0, b2, pii_c()}});
  const PiiModel split({{1.0, pii_b(), pii_c()}, {1.0, pii_b(), pii_c()}, {1.5, b2, pii_c()},
                        {1.5, b2, pii_c()}});
  const auto s1 = closed_form_values(one);
  const auto s2 = closed_form_values(split);
  CHECK(s1.root().L == doctest::Approx(s2.root().L).epsilon(1e-13));
  CHECK(s1.root().V == doctest::Approx(s2.root().V).epsilon(1e-13));
  CHECK(s1.root().eps2 == doctest::Approx(s2.root().eps2).epsilon(1e-13));
  const RootValues mid = pii_values_at(one, s1, 3.5);
  CHECK(mid.L == doctest::Approx(s2.values.L[3]).epsilon(1e-13));
  CHECK(mid.eps2 == doctest::Approx(s2.values.eps2[3]).epsilon(1e-13));
  const RootValues start = pii_values_at(one, s1, 0.0);
  CHECK(start.L == doctest::Approx(s1.root().L).epsilon(1e-14));
}

TEST_CASE("local arbitrage is reported") {
  const Vector b = (Vector(2) << 0.1, 0.2).finished();
  const Matrix c = Matrix::Constant(2, 2, 0.04);
  CHECK_THROWS_AS(adjustment(b, c), LocalArbitrage);
  CHECK_THROWS_AS(adjustment_explicit(b, c), LocalArbitrage);
  CHECK_THROWS_AS(closed_form_values(PiiModel({{1.0, b, c}})), LocalArbitrage);
}

TEST_CASE("explicit formulas agree with the quadratic programs") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = uniform_int(rng, 1, 5);
    const Eigen::Index rank = uniform_int(rng, 0, static_cast<int>(d));
    const Matrix c = random_psd(rng, d, rank);
    const Vector b = c * gaussian(rng, d, 1) + uniform(rng, -0.1, 0.1) * Vector::Ones(d);
    const Adjustment adj = adjustment(b, c);
    const ExplicitAdjustment ex = adjustment_explicit(b, c);
    CHECK(std::abs(adj.a.sum() + 1.0) < 1e-9);
    CHECK(std::abs(ex.a.sum() + 1.0) < 1e-9);
    // Different elements of the optimal set give the same value and differ by null strategies.
    const double qa = adj.a.dot(c * adj.a) - 2.0 * adj.a.dot(b);
    const double qe = ex.a.dot(c * ex.a) - 2.0 * ex.a.dot(b);
    CHECK(std::abs(qa - qe) < 1e-8 * (1.0 + std::abs(qa)));
    CHECK(adj.null_basis.residual(ex.a - adj.a) < 1e-8 * (1.0 + ex.a.norm()));

    const Vector c_sv = c * gaussian(rng, d, 1);
    const double v_minus = uniform(rng, -1.0, 1.0);
    const Vector xi = pure_hedge(c, c_sv, v_minus).x_hat;
    const Vector xe = explicit_pure_hedge(ex, c, c_sv, v_minus);
    CHECK(std::abs(xe.sum() - v_minus) < 1e-9);
    const double qx = xi.dot(c * xi) - 2.0 * xi.dot(c_sv);
    const double qxe = xe.dot(c * xe) - 2.0 * xe.dot(c_sv);
    CHECK(std::abs(qx - qxe) < 1e-8 * (1.0 + std::abs(qx)));

    const MyopicPortfolio my = myopic_minvar(c);
    const QpSolution ref = solve(QpProblem(c, Vector::Zero(d), Matrix::Ones(1, d), Vector::Ones(1)));
    CHECK((my.zeta - ref.x_hat).norm() < 1e-9 * (1.0 + ref.x_hat.norm()));
    CHECK(std::abs(my.variance - (adj.a.dot(c * adj.a) - b.dot(adj.p * b))) <
          1e-8 * (1.0 + my.variance + adj.a.dot(c * adj.a)));
  }
}

TEST_CASE("tree backward induction equals dynamic programming") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const TreeShape shape{uniform_int(rng, 1, 3), uniform_int(rng, 2, 4), 1,
                          uniform_int(rng, 1, 3)};
    const FiniteTree tree = random_tree(rng, shape, trial % 3 == 0);
    const Claim claim = random_claim(rng, tree);
    const double v = uniform(rng, -1.0, 1.0);
    const TreeHedge h = tree_backward(tree, claim);
    const DpSolution dp = dp_solve(tree, claim, v);
    for (std::size_t i = 0; i < tree.size(); ++i) {
      CHECK(std::abs(h.nodes[i].L - dp.values[i].ell) < 1e-10);
      CHECK(std::abs(h.nodes[i].V - dp.values[i].v) < 1e-10);
      CHECK(std::abs(h.nodes[i].eps2 - dp.values[i].e) < 1e-10);
    }
    CHECK(std::abs(hedging_error(h.root(), v) - dp.objective) < 1e-10);
    const TreeStrategy st = feedback_on_tree(tree, h, v);
    for (std::size_t i = 0; i < tree.size(); ++i) {
      CHECK(std::abs(st.wealth[i] - dp.wealth[i]) < 1e-9);
    }
    // Along one path the path-wise strategy matches the node-wise one.
    const std::size_t leaf = tree.terminals().back();
    const StrategyPath path = feedback_strategy(tree, h, v, tree.path_to(leaf));
    CHECK(std::abs(path.wealth.back() - st.wealth[leaf]) < 1e-12);
  }
}

TEST_CASE("tree coefficients solve the L-weighted one-step programs") {
  Rng rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    const FiniteTree tree = random_tree(rng, {3, 3, 2, 2}, trial % 2 == 0);
    const Claim claim = random_claim(rng, tree);
    const TreeHedge h = tree_backward(tree, claim);
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const TreeNode& node = tree.node(i);
      if (node.terminal()) {
        continue;
      }
      const Eigen::Index d = tree.assets();
      double mean_l = 0.0;
      Vector b = Vector::Zero(d);
      Matrix c = Matrix::Zero(d, d);
      Vector c_sv = Vector::Zero(d);
      for (std::size_t k = 0; k < node.branches.size(); ++k) {
        const std::size_t child = node.branches[k].child;
        const double w = node.branches[k].prob * h.nodes[child].L;
        const Vector r = tree.gross_return(i, k).array() - 1.0;
        mean_l += w;
        b += w * r;
        c += w * r * r.transpose();
        c_sv += w * (h.nodes[child].V - h.nodes[i].V) * r;
      }
      b /= mean_l;
      c /= mean_l;
      c_sv /= mean_l;
      const NodeHedge& n = h.nodes[i];
      CHECK(std::abs(n.coeffs.a.sum() + 1.0) < 1e-12);
      CHECK(std::abs(n.coeffs.xi.sum() - n.V) < 1e-12);
      // The c-based programs square the conditioning: compare values tightly
      // and minimizers loosely.
      const Adjustment adj = adjustment(b, c);
      const auto qa = [&](const Vector& a) { return a.dot(c * a) - 2.0 * a.dot(b); };
      CHECK(std::abs(qa(n.coeffs.a) - adj.value) < 1e-10 * (1.0 + std::abs(adj.value)));
      CHECK((n.coeffs.a - adj.a).norm() < 1e-6 * (1.0 + adj.a.norm()));
      const QpSolution ph = pure_hedge(c, c_sv, n.V);
      const auto qx = [&](const Vector& x) { return x.dot(c * x) - 2.0 * x.dot(c_sv); };
      CHECK(std::abs(qx(n.coeffs.xi) - ph.value) < 1e-10 * (1.0 + std::abs(ph.value)));
      CHECK((n.coeffs.xi - ph.x_hat).norm() < 1e-6 * (1.0 + ph.x_hat.norm()));
    }
  }
}

TEST_CASE("null-strategy perturbations leave values unchanged") {
  Rng rng(43);
  int perturbed = 0;
  for (int trial = 0; trial < 20; ++trial) {
    // More assets than branches forces non-trivial null strategies.
    const FiniteTree tree = random_tree(rng, {2, 2, 2, 3});
    const Claim claim = random_claim(rng, tree);
    const TreeHedge base = tree_backward(tree, claim);
    TreeBackwardOptions opt;
    auto shift = [&rng, &perturbed](std::size_t, const SubspaceBasis& null) {
      if (null.is_zero()) {
        return Vector(Vector::Zero(null.ambient_dim()));
      }
      ++perturbed;
      return Vector(null.vectors() * (3.0 * gaussian(rng, null.dim(), 1)));
    };
    opt.a_shift = shift;
    opt.xi_shift = shift;
    const TreeHedge moved = tree_backward(tree, claim, default_context(), opt);
    for (std::size_t i = 0; i < tree.size(); ++i) {
      CHECK(std::abs(moved.nodes[i].L - base.nodes[i].L) < 1e-10);
      CHECK(std::abs(moved.nodes[i].V - base.nodes[i].V) < 1e-10);
      CHECK(std::abs(moved.nodes[i].eps2 - base.nodes[i].eps2) < 1e-10);
    }
  }
  CHECK(perturbed > 0);
}

TEST_CASE("complete binomial market replicates a call") {
  using Spec = FiniteTree::NodeSpec;
  auto v2 = [](double a, double b) { return (Vector(2) << a, b).finished(); };
  const std::vector<Spec> specs = {{"r", 0, v2(1.0, 1.0), {{0.5, "u"}, {0.5, "d"}}},
                                   {"u", 1, v2(1.0, 1.2), {}},
                                   {"d", 1, v2(1.0, 0.9), {}}};
  const FiniteTree tree = FiniteTree::build(specs, "r");
  const Claim call = Claim::payoff({{"u", 0.2}, {"d", 0.0}});
  const TreeHedge h = tree_backward(tree, call);
  // Replication cost with q_u = 1/3.
  CHECK(h.root().V == doctest::Approx(0.2 / 3.0));
  CHECK(std::abs(h.root().eps2) < 1e-14);
  CHECK(hedging_error(h.root(), h.root().V) == doctest::Approx(h.root().eps2));
  CHECK(dp_solve(tree, call, h.root().V).objective < 1e-14);
}

TEST_CASE("feedback strategy input validation") {
  const std::vector<FeedbackStep> plan{{Vector::Ones(2), Vector::Ones(2), 1.0}};
  CHECK_THROWS_AS(feedback_strategy(plan, 0.0, {}), InvalidInput);
  CHECK_THROWS_AS(feedback_strategy(plan, 0.0, {Vector::Ones(3)}), InvalidInput);
  const StrategyPath p = feedback_strategy(plan, 0.5, {Vector::Constant(2, 0.1)});
  // pi = xi + (V - w) a = (1.5, 1.5); wealth 0.5 + 0.3.
  CHECK(p.wealth.back() == doctest::Approx(0.8));
}
