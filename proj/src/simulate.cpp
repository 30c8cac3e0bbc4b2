#include "qhedge/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

#include "qhedge/errors.hpp"

namespace qhedge {

namespace {

constexpr std::uint64_t kBlock = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Moments {
  double s1 = 0.0;
  double s2 = 0.0;
  double s4 = 0.0;
};

// Runs error(path) for every path in fixed blocks and reduces block sums in
// block order, so the result does not depend on the thread count.
SimReport run_paths(const SimOptions& options,
                    const std::function<double(std::uint64_t, std::mt19937_64&)>& error) {
  if (options.n_paths < 2) {
    throw InvalidInput("simulation needs at least 2 paths");
  }
  const std::uint64_t n = options.n_paths;
  const std::uint64_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<Moments> partial(blocks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    std::mt19937_64 rng;
    for (std::uint64_t b = next++; b < blocks; b = next++) {
      Moments m;
      const std::uint64_t end = std::min(n, (b + 1) * kBlock);
      for (std::uint64_t p = b * kBlock; p < end; ++p) {
        rng.seed(path_seed(options.seed, p));
        const double e = error(p, rng);
        const double e2 = e * e;
        m.s1 += e;
        m.s2 += e2;
        m.s4 += e2 * e2;
      }
      partial[b] = m;
    }
  };
  unsigned threads = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  Moments total;
  for (const Moments& m : partial) {
    total.s1 += m.s1;
    total.s2 += m.s2;
    total.s4 += m.s4;
  }
  const double dn = static_cast<double>(n);
  SimReport rep;
  rep.n_paths = n;
  rep.seed = options.seed;
  rep.mean_error = total.s1 / dn;
  rep.mean_sq_error = total.s2 / dn;
  const double var = std::max(0.0, (total.s4 - dn * rep.mean_sq_error * rep.mean_sq_error) / (dn - 1.0));
  rep.std_error = std::sqrt(var / dn);
  return rep;
}

Matrix cholesky_factor(const Matrix& cov) {
  // LDLT tolerates singular covariances; L sqrt(D) with the permutation undone.
  Eigen::LDLT<Matrix> ldlt(cov);
  if (ldlt.info() != Eigen::Success) {
    throw InvalidInput("covariance factorization failed");
  }
  const Vector dvals = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Matrix l = ldlt.matrixL();
  Matrix factor = ldlt.transpositionsP().transpose() * (l * dvals.asDiagonal());
  return factor;
}

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
  return splitmix64(splitmix64(seed) ^ path);
}

SimReport simulate(const IidModel& model, const ClosedFormSolution& sol, double h, double v,
                   const SimOptions& options) {
  const Matrix factor = cholesky_factor(model.sigma());
  const Eigen::Index d = model.assets();
  const int periods = model.periods();
  auto error = [&](std::uint64_t, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector z(d);
    double w = v;
    for (int t = 0; t < periods; ++t) {
      for (Eigen::Index j = 0; j < d; ++j) {
        z(j) = normal(rng);
      }
      const Vector r = model.mu() + factor * z;
      const StepCoefficients& s = sol.steps[t];
      const Vector pi = h * s.xi + (h * sol.values.V[t] - w) * s.a;
      w += pi.dot(r);
    }
    return w - h;
  };
  return run_paths(options, error);
}

SimReport simulate(const PiiModel& model, const ClosedFormSolution& sol, double h, double v,
                   const SimOptions& options) {
  if (!(options.step > 0.0) || !std::isfinite(options.step)) {
    throw InvalidInput("Euler step must be positive and finite");
  }
  struct Substep {
    double start;
    double dt;
    std::size_t segment;
  };
  std::vector<Substep> grid;
  std::vector<Matrix> factors;
  for (std::size_t i = 0; i < model.segments().size(); ++i) {
    const PiiSegment& s = model.segments()[i];
    factors.push_back(cholesky_factor(s.c));
    const auto m = static_cast<std::size_t>(std::ceil(s.duration / options.step - 1e-12));
    const std::size_t count = std::max<std::size_t>(1, m);
    const double dt = s.duration / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
      grid.push_back({model.segment_start(i) + dt * static_cast<double>(k), dt, i});
    }
  }
  // Coefficients are deterministic; evaluate once per grid point.
  std::vector<double> v_at(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    v_at[k] = pii_values_at(model, sol, grid[k].start).V;
  }
  const Eigen::Index d = model.assets();
  auto error = [&](std::uint64_t, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector z(d);
    double w = v;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Substep& g = grid[k];
      const PiiSegment& seg = model.segments()[g.segment];
      for (Eigen::Index j = 0; j < d; ++j) {
        z(j) = normal(rng);
      }
      const Vector r = seg.b * g.dt + std::sqrt(g.dt) * (factors[g.segment] * z);
      const StepCoefficients& s = sol.steps[g.segment];
      const double target = h * v_at[k];
      const Vector pi = target * s.zeta + (target - w) * s.a;
      w += pi.dot(r);
    }
    return w - h;
  };
  return run_paths(options, error);
}

SimReport simulate(const FiniteTree& tree, const TreeHedge& hedge, const Claim& claim, double v,
                   const SimOptions& options) {
  claim.validate_for(tree);
  const TreeStrategy strat = feedback_on_tree(tree, hedge, v);
  const auto paths = static_cast<std::uint64_t>(tree.terminals().size());
  bool enumerate = options.tree_mode == TreeSampling::Enumerate ||
                   (options.tree_mode == TreeSampling::Auto && paths <= kEnumerationLimit);
  SimReport rep;
  if (options.tree_mode == TreeSampling::Enumerate && paths > kEnumerationLimit) {
    rep.warnings.push_back("enumerating " + std::to_string(paths) + " paths");
  }
  if (enumerate) {
    const std::vector<double> reach = tree.reach_probabilities();
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t t : tree.terminals()) {
      const double e = strat.wealth[t] - claim.at(tree, t);
      s1 += reach[t] * e;
      s2 += reach[t] * e * e;
    }
    rep.n_paths = paths;
    rep.seed = options.seed;
    rep.mean_error = s1;
    rep.mean_sq_error = s2;
    rep.exact = true;
    return rep;
  }
  if (options.tree_mode == TreeSampling::Auto) {
    rep.warnings.push_back(std::to_string(paths) + " paths exceed the enumeration limit; sampling " +
                           std::to_string(options.n_paths));
  }
  auto error = [&](std::uint64_t, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::size_t i = tree.root();
    while (!tree.node(i).terminal()) {
      const auto& br = tree.node(i).branches;
      double u = uniform(rng);
      std::size_t k = 0;
      while (k + 1 < br.size() && u >= br[k].prob) {
        u -= br[k].prob;
        ++k;
      }
      i = br[k].child;
    }
    return strat.wealth[i] - claim.at(tree, i);
  };
  SimReport sampled = run_paths(options, error);
  sampled.warnings = std::move(rep.warnings);
  return sampled;
}

}  // namespace qhedge
