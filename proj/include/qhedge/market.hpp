#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qhedge/numeric.hpp"

namespace qhedge {

/// Local characteristics of the log-return process in dollar-amount form:
/// b is the drift of the returns, c their second-moment (rate) matrix.
struct LocalCharacteristics {
  Vector b;
  Matrix c;
};

/// Discrete-time model with IID one-period simple returns of mean `mu` and
/// covariance `sigma` over `periods` steps.
class IidModel {
 public:
  IidModel(Vector mu, Matrix sigma, int periods, const NumericContext& ctx = default_context());

  const Vector& mu() const noexcept { return mu_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  int periods() const noexcept { return periods_; }
  Eigen::Index assets() const noexcept { return mu_.size(); }

 private:
  Vector mu_;
  Matrix sigma_;
  int periods_;
};

struct PiiSegment {
  double duration;
  Vector b;
  Matrix c;
};

/// Ito semimartingale with independent increments and piecewise-constant
/// characteristics (drift rate b, covariance rate c) on consecutive segments.
class PiiModel {
 public:
  explicit PiiModel(std::vector<PiiSegment> segments, const NumericContext& ctx = default_context());

  const std::vector<PiiSegment>& segments() const noexcept { return segments_; }
  double horizon() const noexcept { return horizon_; }
  Eigen::Index assets() const noexcept { return segments_.front().b.size(); }
  /// Start time of segment i.
  double segment_start(std::size_t i) const { return starts_.at(i); }
  /// Segment containing t; the last segment is closed at the horizon.
  std::size_t segment_at(double t) const;

 private:
  std::vector<PiiSegment> segments_;
  std::vector<double> starts_;
  double horizon_ = 0.0;
};

struct TreeBranch {
  double prob;
  std::size_t child;
};

struct TreeNode {
  std::string id;
  int time = 0;
  Vector prices;
  std::vector<TreeBranch> branches;
  std::optional<std::size_t> parent;

  bool terminal() const noexcept { return branches.empty(); }
};

/// Non-recombining event tree. Nodes are stored in breadth-first order so the
/// root has index 0 and every child has a larger index than its parent.
class FiniteTree {
 public:
  struct NodeSpec {
    std::string id;
    int time = 0;
    Vector prices;
    std::vector<std::pair<double, std::string>> branches;
  };

  /// Validates and orders the nodes. Probabilities must be positive; sums off
  /// by at most ctx.probability_tol are re-normalized and recorded as warnings.
  static FiniteTree build(const std::vector<NodeSpec>& specs, const std::string& root,
                          const NumericContext& ctx = default_context());

  std::size_t size() const noexcept { return nodes_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t root() const noexcept { return 0; }
  Eigen::Index assets() const noexcept { return nodes_.front().prices.size(); }
  int horizon() const noexcept { return horizon_; }
  const std::vector<std::size_t>& terminals() const noexcept { return terminals_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  std::optional<std::size_t> find(const std::string& id) const;
  /// Componentwise S_child / S_node for branch k of `node`.
  Vector gross_return(std::size_t node, std::size_t k) const;
  /// Unconditional probability of reaching each node.
  std::vector<double> reach_probabilities() const;
  /// Node indices from the root to `node`, inclusive.
  std::vector<std::size_t> path_to(std::size_t node) const;
  /// True when asset j has strictly positive price on every node.
  bool strictly_positive_asset(Eigen::Index j) const;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> terminals_;
  std::vector<std::string> warnings_;
  int horizon_ = 0;
};

/// Terminal payoff: a constant or a map from terminal node id to value.
class Claim {
 public:
  static Claim constant(double value);
  static Claim payoff(std::map<std::string, double> by_node);

  bool is_constant() const noexcept { return constant_.has_value(); }
  double constant_value() const;
  const std::map<std::string, double>& by_node() const noexcept { return by_node_; }
  /// Payoff on a terminal node; throws InvalidInput when undefined there.
  double at(const FiniteTree& tree, std::size_t node) const;
  /// Throws unless the claim is defined on every terminal node of `tree`.
  void validate_for(const FiniteTree& tree) const;

 private:
  std::optional<double> constant_;
  std::map<std::string, double> by_node_;
};

/// Constant characteristics (mu, Sigma + mu mu') for any period 1..T.
LocalCharacteristics log_characteristics(const IidModel& model, int period);
/// Characteristics of the segment containing t in [0, T].
LocalCharacteristics log_characteristics(const PiiModel& model, double t);
/// Conditional moments of one-step simple returns at a non-terminal node.
LocalCharacteristics log_characteristics(const FiniteTree& tree, std::size_t node);

enum class TimeMode { Discrete, Continuous };

/// Local no-arbitrage: b ∈ Ran(c) + Ran(1). The range condition is the same
/// in both time modes.
bool check_local_na(const Vector& b, const Matrix& c, TimeMode mode,
                    const NumericContext& ctx = default_context());

/// Tree expressed in units of asset `numeraire`, under the measure with
/// density X_T^2 / E[X_T^2].
struct DiscountedTree {
  FiniteTree tree;
  /// Reweighted unconditional probability of each node (sums to one over
  /// the terminal nodes).
  std::vector<double> node_weights;
  /// E[X_T^2] under the original measure.
  double numeraire_second_moment = 0.0;
};

DiscountedTree discount_tree(const FiniteTree& tree, Eigen::Index numeraire,
                             const NumericContext& ctx = default_context());

/// H / X_T on every terminal node.
Claim discount_claim(const FiniteTree& tree, const Claim& claim, Eigen::Index numeraire);

}  // namespace qhedge
