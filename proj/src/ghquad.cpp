// SPDX-License-Identifier: Apache-2.0
#include "dbm/ghquad.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>
#include <string>

namespace dbm {

namespace {

constexpr double kFirstPanel = 0.02;
constexpr double kPanelGrowth = 1.5;
constexpr double kWidestPanel = 0.5;
constexpr double kCutoff = 9.0;

}  // namespace

LegendreRule gauss_legendre(int m, double lo, double hi) {
  if (m < 1) throw DomainError("gauss_legendre: order must be >= 1");
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  std::vector<std::pair<double, double>> pts;
  for (double r : boost::math::legendre_p_zeros<double>(m)) {
    const double dp = boost::math::legendre_p_prime(m, r);
    const double w = half * 2.0 / ((1.0 - r * r) * dp * dp);
    pts.emplace_back(mid + half * r, w);
    if (r != 0.0) pts.emplace_back(mid - half * r, w);
  }
  std::sort(pts.begin(), pts.end());
  LegendreRule rule;
  for (const auto& [x, w] : pts) {
    rule.nodes.push_back(x);
    rule.weights.push_back(w);
  }
  return rule;
}

QuadratureRule::QuadratureRule(Family family, int parameter, std::vector<double> positive_nodes,
                               std::vector<double> positive_weights, bool has_zero_node)
    : family_(family), parameter_(parameter) {
  // positive_nodes ascending; with has_zero_node the first entry is 0 and
  // carries its full weight, the others carry the weight of one side.
  double total = 0.0;
  for (std::size_t i = 0; i < positive_nodes.size(); ++i) {
    total += (has_zero_node && i == 0) ? positive_weights[i] : 2.0 * positive_weights[i];
  }
  for (double& w : positive_weights) w /= total;

  const std::size_t start = has_zero_node ? 1 : 0;
  for (std::size_t i = positive_nodes.size(); i-- > start;) {
    nodes_.push_back(-positive_nodes[i]);
    weights_.push_back(positive_weights[i]);
  }
  if (has_zero_node) {
    nodes_.push_back(0.0);
    weights_.push_back(positive_weights[0]);
  }
  for (std::size_t i = start; i < positive_nodes.size(); ++i) {
    nodes_.push_back(positive_nodes[i]);
    weights_.push_back(positive_weights[i]);
  }
  half_nodes_ = positive_nodes;
  half_weights_.resize(positive_weights.size());
  for (std::size_t i = 0; i < positive_weights.size(); ++i) {
    half_weights_[i] = (has_zero_node && i == 0) ? positive_weights[i] : 2.0 * positive_weights[i];
  }
}

QuadratureRule QuadratureRule::composite(int points_per_panel) {
  if (points_per_panel < 2 || points_per_panel > 64) {
    throw DomainError("quadrature: points per panel must lie in [2, 64]");
  }
  const int m = points_per_panel;
  // Gauss-Legendre nodes and weights on [-1, 1].
  std::vector<double> xi;
  std::vector<double> omega;
  for (double r : boost::math::legendre_p_zeros<double>(m)) {
    const double dp = boost::math::legendre_p_prime(m, r);
    const double w = 2.0 / ((1.0 - r * r) * dp * dp);
    xi.push_back(r);
    omega.push_back(w);
    if (r != 0.0) {
      xi.push_back(-r);
      omega.push_back(w);
    }
  }

  std::vector<double> nodes;
  std::vector<double> weights;
  double left = 0.0;
  double width = kFirstPanel;
  while (left < kCutoff) {
    const double right = std::min(left + width, kCutoff);
    const double mid = 0.5 * (left + right);
    const double half = 0.5 * (right - left);
    for (std::size_t i = 0; i < xi.size(); ++i) {
      const double z = mid + half * xi[i];
      nodes.push_back(z);
      weights.push_back(half * omega[i] * std::exp(-0.5 * z * z));
    }
    left = right;
    width = std::min(width * kPanelGrowth, kWidestPanel);
  }

  std::vector<std::size_t> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nodes[a] < nodes[b]; });
  std::vector<double> sorted_nodes;
  std::vector<double> sorted_weights;
  for (std::size_t i : order) {
    sorted_nodes.push_back(nodes[i]);
    sorted_weights.push_back(weights[i]);
  }
  return QuadratureRule(Family::composite, m, std::move(sorted_nodes), std::move(sorted_weights), false);
}

QuadratureRule QuadratureRule::gauss_hermite(int n) {
  if (n < 1 || n > 400) throw DomainError("quadrature: Gauss-Hermite order must lie in [1, 400]");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const Eigen::VectorXd& x = solver.eigenvalues();
  const Eigen::MatrixXd& v = solver.eigenvectors();

  // Pair node i with node n-1-i and average, which makes the rule exactly
  // symmetric.
  std::vector<double> nodes;
  std::vector<double> weights;
  const bool odd = n % 2 == 1;
  if (odd) {
    nodes.push_back(0.0);
    weights.push_back(v(0, n / 2) * v(0, n / 2));
  }
  for (int i = (n + 1) / 2; i < n; ++i) {
    const int j = n - 1 - i;
    nodes.push_back(0.5 * (x(i) - x(j)));
    weights.push_back(0.5 * (v(0, i) * v(0, i) + v(0, j) * v(0, j)));
  }
  return QuadratureRule(Family::gauss_hermite, n, std::move(nodes), std::move(weights), odd);
}

const QuadratureRule& QuadratureRule::standard() {
  static const QuadratureRule rule = composite(kDefaultPanelPoints);
  return rule;
}

}  // namespace dbm
