#pragma once

// Random problem generators and independent reference solvers shared by the
// unit tests and the acceptance runner.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhedge/market.hpp"
#include "qhedge/numeric.hpp"

namespace qhedge::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = n(rng);
    }
  }
  return m;
}

inline Matrix random_orthogonal(Rng& rng, Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(rng, n, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// U diag(s) V' with singular values in [0.1, 10] and the given rank.
inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index rank) {
  const Matrix u = random_orthogonal(rng, rows);
  const Matrix v = random_orthogonal(rng, cols);
  Matrix s = Matrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rank; ++i) {
    s(i, i) = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
  }
  return u * s * v.transpose();
}

/// Symmetric PSD n x n of the given rank, nonzero eigenvalues in [0.1, 10].
inline Matrix random_psd(Rng& rng, Eigen::Index n, Eigen::Index rank) {
  if (rank == 0) {
    return Matrix::Zero(n, n);
  }
  const Matrix q = random_orthogonal(rng, n).leftCols(rank);
  Vector lambda(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    lambda(i) = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
  }
  const Matrix c = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (c + c.transpose());
}

/// Minimum-norm solution of the KKT system [2C A'; A 0][x; mu] = [2F; b] via
/// complete orthogonal decomposition; returns q(x).
inline double kkt_value(const Matrix& c, const Vector& f, const Matrix& a, const Vector& b,
                        Vector* x_out = nullptr) {
  const Eigen::Index n = c.rows();
  const Eigen::Index k = a.rows();
  Matrix kkt = Matrix::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = 2.0 * c;
  kkt.topRightCorner(n, k) = a.transpose();
  kkt.bottomLeftCorner(k, n) = a;
  Vector rhs(n + k);
  rhs << 2.0 * f, b;
  const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  const Vector x = sol.head(n);
  if (x_out != nullptr) {
    *x_out = x;
  }
  return x.dot(c * x) - 2.0 * x.dot(f);
}

struct TreeShape {
  int periods = 3;
  int max_branches = 3;
  int min_branches = 2;
  Eigen::Index assets = 2;
};

/// Arbitrage-free random tree: each node draws positive state prices and
/// rescales random positive gross returns so that sum_k q_k G_k = 1 for every
/// asset. Asset 0 may optionally be a constant bond.
inline FiniteTree random_tree(Rng& rng, const TreeShape& shape, bool constant_first = false) {
  std::vector<FiniteTree::NodeSpec> specs;
  struct Pending {
    std::string id;
    int time;
    Vector prices;
  };
  std::vector<Pending> stack;
  Vector p0(shape.assets);
  for (Eigen::Index j = 0; j < shape.assets; ++j) {
    p0(j) = uniform(rng, 0.5, 2.0);
  }
  if (constant_first) {
    p0(0) = 1.0;
  }
  stack.push_back({"n", 0, p0});
  while (!stack.empty()) {
    Pending cur = stack.back();
    stack.pop_back();
    FiniteTree::NodeSpec s;
    s.id = cur.id;
    s.time = cur.time;
    s.prices = cur.prices;
    if (cur.time < shape.periods) {
      const int m = uniform_int(rng, shape.min_branches, shape.max_branches);
      std::vector<double> q(m);
      std::vector<double> prob(m);
      double total = 0.0;
      for (int k = 0; k < m; ++k) {
        q[k] = uniform(rng, 0.2, 1.0);
        prob[k] = uniform(rng, 0.3, 1.5);
        total += prob[k];
      }
      if (constant_first) {
        double qs = 0.0;
        for (double x : q) {
          qs += x;
        }
        for (double& x : q) {
          x /= qs;
        }
      }
      Matrix g(m, shape.assets);
      for (int k = 0; k < m; ++k) {
        for (Eigen::Index j = 0; j < shape.assets; ++j) {
          g(k, j) = uniform(rng, 0.6, 1.6);
        }
      }
      for (Eigen::Index j = 0; j < shape.assets; ++j) {
        double sq = 0.0;
        for (int k = 0; k < m; ++k) {
          sq += q[k] * g(k, j);
        }
        g.col(j) /= sq;
      }
      if (constant_first) {
        g.col(0).setOnes();
      }
      for (int k = 0; k < m; ++k) {
        const std::string child = cur.id + "." + std::to_string(k);
        s.branches.emplace_back(prob[k] / total, child);
        stack.push_back({child, cur.time + 1, cur.prices.cwiseProduct(g.row(k).transpose())});
      }
    }
    specs.push_back(std::move(s));
  }
  return FiniteTree::build(specs, "n");
}

inline Claim random_claim(Rng& rng, const FiniteTree& tree) {
  std::map<std::string, double> values;
  for (std::size_t t : tree.terminals()) {
    values[tree.node(t).id] = uniform(rng, -1.0, 2.0);
  }
  return Claim::payoff(std::move(values));
}

/// Recombination-free tree with 2d equally likely branches per node,
/// R = mu +/- sqrt(d) l_i with l_i the Cholesky columns of Sigma, so the
/// one-period returns have mean mu and covariance Sigma exactly.
inline FiniteTree moment_tree(const Vector& mu, const Matrix& sigma, int periods) {
  const Eigen::Index d = mu.size();
  const Matrix l = sigma.llt().matrixL();
  std::vector<Vector> gross;
  for (Eigen::Index i = 0; i < d; ++i) {
    gross.push_back(Vector::Ones(d) + mu + std::sqrt(static_cast<double>(d)) * l.col(i));
    gross.push_back(Vector::Ones(d) + mu - std::sqrt(static_cast<double>(d)) * l.col(i));
  }
  const double p = 1.0 / static_cast<double>(gross.size());
  std::vector<FiniteTree::NodeSpec> specs;
  std::vector<FiniteTree::NodeSpec> frontier{{"r", 0, Vector::Ones(d), {}}};
  for (int t = 0; t <= periods; ++t) {
    std::vector<FiniteTree::NodeSpec> next;
    for (auto& s : frontier) {
      if (t < periods) {
        for (std::size_t k = 0; k < gross.size(); ++k) {
          const std::string child = s.id + "." + std::to_string(k);
          s.branches.emplace_back(p, child);
          next.push_back({child, t + 1, s.prices.cwiseProduct(gross[k]), {}});
        }
      }
      specs.push_back(std::move(s));
    }
    frontier = std::move(next);
  }
  return FiniteTree::build(specs, "r");
}

inline Vector li_ng_mu() { return (Vector(3) << 0.162, 0.246, 0.228).finished(); }

inline Matrix li_ng_sigma() {
  return (Matrix(3, 3) << 146, 187, 145, 187, 854, 104, 145, 104, 289).finished() * 1e-4;
}

inline Vector pii_b() { return (Vector(4) << 0.2042, 0.5047, 0.1059, 0.0359).finished(); }

/// c = sigma^2 for the symmetric sigma with vech
/// [1.8385 0.3389 -0.5712 0 5.8728 0.8157 0.1766 1.0503 -0.1164 0.4604].
inline Matrix pii_c() {
  const double vech[] = {1.8385, 0.3389, -0.5712, 0.0, 5.8728, 0.8157, 0.1766, 1.0503, -0.1164, 0.4604};
  Matrix s(4, 4);
  int k = 0;
  for (int j = 0; j < 4; ++j) {
    for (int i = j; i < 4; ++i) {
      s(i, j) = s(j, i) = vech[k++];
    }
  }
  return s * s;
}

inline double rel_err(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

}  // namespace qhedge::testing
