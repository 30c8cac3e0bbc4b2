#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qhedge/engine.hpp"
#include "qhedge/market.hpp"

namespace qhedge {

enum class TreeSampling { Auto, Enumerate, Sample };

struct SimOptions {
  std::uint64_t n_paths = 100000;
  std::uint64_t seed = 1;
  TreeSampling tree_mode = TreeSampling::Auto;
  /// Largest Euler step for PII models.
  double step = 0.01;
  /// 0 uses std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Statistics of the terminal error e = wealth_T - H.
struct SimReport {
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
  double mean_error = 0.0;
  /// Empirical E[e^2]; the exact expectation when `exact` is set.
  double mean_sq_error = 0.0;
  /// Sample standard deviation of e^2 divided by sqrt(n_paths).
  double std_error = 0.0;
  bool exact = false;
  std::vector<std::string> warnings;
};

/// Paths above this count are sampled instead of enumerated.
inline constexpr std::uint64_t kEnumerationLimit = 1000000;

/// Per-path generator: std::mt19937_64 seeded with splitmix64 of (seed, path).
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

/// IID model with Gaussian one-period returns N(mu, Sigma); constant claim h.
SimReport simulate(const IidModel& model, const ClosedFormSolution& sol, double h, double v,
                   const SimOptions& options);

/// PII model by an Euler scheme with Gaussian increments; constant claim h.
SimReport simulate(const PiiModel& model, const ClosedFormSolution& sol, double h, double v,
                   const SimOptions& options);

/// Tree model: exact enumeration of terminal nodes or sampling of paths.
SimReport simulate(const FiniteTree& tree, const TreeHedge& hedge, const Claim& claim, double v,
                   const SimOptions& options);

}  // namespace qhedge
