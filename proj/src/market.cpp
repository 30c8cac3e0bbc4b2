#include "qhedge/market.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "qhedge/errors.hpp"
#include "qhedge/subspace.hpp"

namespace qhedge {

namespace {

void require_psd(const Matrix& m, const char* what, const NumericContext& ctx) {
  require_finite(m, what);
  if (m.rows() != m.cols()) {
    throw InvalidInput(std::string(what) + " must be square");
  }
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > ctx.symmetry_tol * scale) {
    throw InvalidInput(std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) < -ctx.psd_tol * std::max(1.0, std::abs(m.trace()))) {
    throw InvalidInput(std::string(what) + " is not positive semidefinite");
  }
}

}  // namespace

IidModel::IidModel(Vector mu, Matrix sigma, int periods, const NumericContext& ctx)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), periods_(periods) {
  if (mu_.size() == 0) {
    throw InvalidInput("iid model: mu is empty");
  }
  require_finite(mu_, "iid model mu");
  if (sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size()) {
    throw InvalidInput("iid model: sigma must be " + std::to_string(mu_.size()) + "x" +
                       std::to_string(mu_.size()));
  }
  require_psd(sigma_, "iid model sigma", ctx);
  sigma_ = 0.5 * (sigma_ + sigma_.transpose());
  if (periods_ < 1) {
    throw InvalidInput("iid model: T must be at least 1, got " + std::to_string(periods_));
  }
}

PiiModel::PiiModel(std::vector<PiiSegment> segments, const NumericContext& ctx)
    : segments_(std::move(segments)) {
  if (segments_.empty()) {
    throw InvalidInput("pii model: no segments");
  }
  const Eigen::Index d = segments_.front().b.size();
  if (d == 0) {
    throw InvalidInput("pii model: empty drift vector");
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    auto& s = segments_[i];
    const std::string tag = "pii segment " + std::to_string(i);
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
      throw InvalidInput(tag + ": duration must be positive and finite");
    }
    if (s.b.size() != d || s.c.rows() != d || s.c.cols() != d) {
      throw InvalidInput(tag + ": expected b of size " + std::to_string(d) + " and c " +
                         std::to_string(d) + "x" + std::to_string(d));
    }
    require_finite(s.b, (tag + " b").c_str());
    require_psd(s.c, (tag + " c").c_str(), ctx);
    s.c = 0.5 * (s.c + s.c.transpose());
    starts_.push_back(horizon_);
    horizon_ += s.duration;
  }
}

std::size_t PiiModel::segment_at(double t) const {
  if (!(t >= 0.0) || t > horizon_) {
    throw InvalidInput("time " + format_number(t) + " outside [0, " + format_number(horizon_) +
                       "]");
  }
  for (std::size_t i = segments_.size(); i-- > 0;) {
    if (t >= starts_[i]) {
      return i;
    }
  }
  return 0;
}

FiniteTree FiniteTree::build(const std::vector<NodeSpec>& specs, const std::string& root,
                             const NumericContext& ctx) {
  if (specs.empty()) {
    throw InvalidInput("tree has no nodes");
  }
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!by_id.emplace(specs[i].id, i).second) {
      throw InvalidInput("duplicate tree node id '" + specs[i].id + "'");
    }
  }
  const auto root_it = by_id.find(root);
  if (root_it == by_id.end()) {
    throw InvalidInput("tree root '" + root + "' is not a node");
  }
  const Eigen::Index d = specs[root_it->second].prices.size();
  if (d == 0) {
    throw InvalidInput("tree root has no prices");
  }

  FiniteTree tree;
  std::vector<std::size_t> new_index(specs.size(), std::numeric_limits<std::size_t>::max());
  std::deque<std::size_t> queue{root_it->second};
  new_index[root_it->second] = 0;
  tree.nodes_.reserve(specs.size());

  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    const NodeSpec& spec = specs[s];
    if (spec.prices.size() != d) {
      throw InvalidInput("node '" + spec.id + "' has " + std::to_string(spec.prices.size()) +
                         " prices, expected " + std::to_string(d));
    }
    require_finite(spec.prices, ("prices of node '" + spec.id + "'").c_str());

    TreeNode node;
    node.id = spec.id;
    node.time = spec.time;
    node.prices = spec.prices;
    const std::size_t self = tree.nodes_.size();

    double total = 0.0;
    for (const auto& [prob, child_id] : spec.branches) {
      if (!(prob > 0.0) || !std::isfinite(prob)) {
        throw InvalidInput("node '" + spec.id + "': branch probabilities must be positive");
      }
      total += prob;
    }
    if (!spec.branches.empty()) {
      if (std::abs(total - 1.0) > ctx.probability_tol) {
        throw InvalidInput("node '" + spec.id + "': branch probabilities sum to " +
                           format_number(total));
      }
      if (std::abs(total - 1.0) > 64 * std::numeric_limits<double>::epsilon()) {
        tree.warnings_.push_back("node '" + spec.id + "': probabilities re-normalized from " +
                                 format_number(total));
      }
      for (Eigen::Index i = 0; i < spec.prices.size(); ++i) {
        if (spec.prices(i) == 0.0) {
          throw InvalidInput("node '" + spec.id +
                             "': zero price on a non-terminal node (returns undefined)");
        }
      }
    }
    for (const auto& [prob, child_id] : spec.branches) {
      const auto it = by_id.find(child_id);
      if (it == by_id.end()) {
        throw InvalidInput("node '" + spec.id + "' branches to unknown node '" + child_id + "'");
      }
      if (new_index[it->second] != std::numeric_limits<std::size_t>::max()) {
        throw InvalidInput("node '" + child_id +
                           "' is reached twice (trees must not recombine or cycle)");
      }
      if (specs[it->second].time != spec.time + 1) {
        throw InvalidInput("node '" + child_id + "' has time " +
                           std::to_string(specs[it->second].time) + ", expected " +
                           std::to_string(spec.time + 1));
      }
      const std::size_t idx = self + 1 + queue.size();
      new_index[it->second] = idx;
      node.branches.push_back(TreeBranch{prob / total, idx});
      queue.push_back(it->second);
    }
    tree.nodes_.push_back(std::move(node));
  }

  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (new_index[i] == std::numeric_limits<std::size_t>::max()) {
      throw InvalidInput("node '" + specs[i].id + "' is not reachable from the root");
    }
  }
  for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
    for (const auto& br : tree.nodes_[i].branches) {
      tree.nodes_[br.child].parent = i;
    }
    if (tree.nodes_[i].terminal()) {
      tree.terminals_.push_back(i);
    }
  }
  tree.horizon_ = tree.nodes_[tree.terminals_.front()].time;
  for (std::size_t t : tree.terminals_) {
    if (tree.nodes_[t].time != tree.horizon_) {
      throw InvalidInput("terminal node '" + tree.nodes_[t].id + "' has time " +
                         std::to_string(tree.nodes_[t].time) + " but maturity is " +
                         std::to_string(tree.horizon_));
    }
  }
  bool has_numeraire = false;
  for (Eigen::Index j = 0; j < d && !has_numeraire; ++j) {
    has_numeraire = tree.strictly_positive_asset(j);
  }
  if (!has_numeraire) {
    throw InvalidInput("no asset has strictly positive prices on every node (no numeraire)");
  }
  return tree;
}

std::optional<std::size_t> FiniteTree::find(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) {
      return i;
    }
  }
  return std::nullopt;
}

Vector FiniteTree::gross_return(std::size_t node, std::size_t k) const {
  const TreeNode& n = nodes_.at(node);
  return nodes_.at(n.branches.at(k).child).prices.cwiseQuotient(n.prices);
}

std::vector<double> FiniteTree::reach_probabilities() const {
  std::vector<double> reach(nodes_.size(), 0.0);
  reach[0] = 1.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& br : nodes_[i].branches) {
      reach[br.child] = reach[i] * br.prob;
    }
  }
  return reach;
}

std::vector<std::size_t> FiniteTree::path_to(std::size_t node) const {
  std::vector<std::size_t> path;
  std::optional<std::size_t> cur = node;
  while (cur) {
    path.push_back(*cur);
    cur = nodes_.at(*cur).parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

bool FiniteTree::strictly_positive_asset(Eigen::Index j) const {
  if (j < 0 || j >= assets()) {
    return false;
  }
  return std::all_of(nodes_.begin(), nodes_.end(),
                     [j](const TreeNode& n) { return n.prices(j) > 0.0; });
}

Claim Claim::constant(double value) {
  if (!std::isfinite(value)) {
    throw InvalidInput("claim value must be finite");
  }
  Claim c;
  c.constant_ = value;
  return c;
}

Claim Claim::payoff(std::map<std::string, double> by_node) {
  for (const auto& [id, v] : by_node) {
    if (!std::isfinite(v)) {
      throw InvalidInput("payoff on node '" + id + "' is not finite");
    }
  }
  Claim c;
  c.by_node_ = std::move(by_node);
  return c;
}

double Claim::constant_value() const {
  if (!constant_) {
    throw NotApplicable("claim is a terminal payoff map, not a constant");
  }
  return *constant_;
}

double Claim::at(const FiniteTree& tree, std::size_t node) const {
  if (constant_) {
    return *constant_;
  }
  const auto& id = tree.node(node).id;
  const auto it = by_node_.find(id);
  if (it == by_node_.end()) {
    throw InvalidInput("payoff undefined on terminal node '" + id + "'");
  }
  return it->second;
}

void Claim::validate_for(const FiniteTree& tree) const {
  for (std::size_t t : tree.terminals()) {
    (void)at(tree, t);
  }
}

LocalCharacteristics log_characteristics(const IidModel& model, int period) {
  if (period < 1 || period > model.periods()) {
    throw InvalidInput("period " + std::to_string(period) + " outside 1.." +
                       std::to_string(model.periods()));
  }
  return {model.mu(), model.sigma() + model.mu() * model.mu().transpose()};
}

LocalCharacteristics log_characteristics(const PiiModel& model, double t) {
  const PiiSegment& s = model.segments()[model.segment_at(t)];
  return {s.b, s.c};
}

LocalCharacteristics log_characteristics(const FiniteTree& tree, std::size_t node) {
  if (node >= tree.size()) {
    throw InvalidInput("node index " + std::to_string(node) + " out of range");
  }
  const TreeNode& n = tree.node(node);
  if (n.terminal()) {
    throw InvalidInput("node '" + n.id + "' is terminal; no one-step returns");
  }
  const Eigen::Index d = tree.assets();
  LocalCharacteristics out{Vector::Zero(d), Matrix::Zero(d, d)};
  for (std::size_t k = 0; k < n.branches.size(); ++k) {
    const Vector r = tree.gross_return(node, k).array() - 1.0;
    out.b += n.branches[k].prob * r;
    out.c += n.branches[k].prob * r * r.transpose();
  }
  return out;
}

bool check_local_na(const Vector& b, const Matrix& c, TimeMode /*mode*/,
                    const NumericContext& ctx) {
  if (c.rows() != b.size() || c.cols() != b.size()) {
    throw InvalidInput("check_local_na: b and c dimensions differ");
  }
  const Eigen::Index d = b.size();
  Matrix span(d, d + 1);
  span << c, Vector::Ones(d);
  return SubspaceBasis::span(span, ctx).contains(b, ctx);
}

DiscountedTree discount_tree(const FiniteTree& tree, Eigen::Index numeraire,
                             const NumericContext& ctx) {
  if (numeraire < 0 || numeraire >= tree.assets()) {
    throw InvalidNumeraire("numeraire index " + std::to_string(numeraire) + " out of range (" +
                           std::to_string(tree.assets()) + " assets)");
  }
  for (const TreeNode& n : tree.nodes()) {
    if (!(n.prices(numeraire) > 0.0)) {
      throw InvalidNumeraire("numeraire positivity fails: asset " + std::to_string(numeraire) +
                             " has price " + format_number(n.prices(numeraire)) +
                             " on node '" + n.id + "'");
    }
  }
  // Z_n = E[X_T^2 | node n]
  std::vector<double> z(tree.size(), 0.0);
  for (std::size_t i = tree.size(); i-- > 0;) {
    const TreeNode& n = tree.node(i);
    if (n.terminal()) {
      z[i] = n.prices(numeraire) * n.prices(numeraire);
    } else {
      for (const auto& br : n.branches) {
        z[i] += br.prob * z[br.child];
      }
    }
  }

  std::vector<FiniteTree::NodeSpec> specs;
  specs.reserve(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    FiniteTree::NodeSpec s;
    s.id = n.id;
    s.time = n.time;
    s.prices = n.prices / n.prices(numeraire);
    s.prices(numeraire) = 1.0;
    double total = 0.0;
    for (const auto& br : n.branches) {
      total += br.prob * z[br.child] / z[i];
    }
    for (const auto& br : n.branches) {
      s.branches.emplace_back(br.prob * z[br.child] / z[i] / total, tree.node(br.child).id);
    }
    specs.push_back(std::move(s));
  }
  DiscountedTree out{FiniteTree::build(specs, tree.node(0).id, ctx), {}, z[0]};
  out.node_weights = out.tree.reach_probabilities();
  return out;
}

Claim discount_claim(const FiniteTree& tree, const Claim& claim, Eigen::Index numeraire) {
  std::map<std::string, double> out;
  for (std::size_t t : tree.terminals()) {
    const TreeNode& n = tree.node(t);
    out[n.id] = claim.at(tree, t) / n.prices(numeraire);
  }
  return Claim::payoff(std::move(out));
}

}  // namespace qhedge
