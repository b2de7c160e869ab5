// SPDX-License-Identifier: Apache-2.0
//
// Parameters of a K-layer deep Boltzmann machine, its interaction matrices
// and the annealed region.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dbm/chainpoly.hpp"
#include "dbm/field.hpp"

namespace dbm {

// (beta, lambda, h) for K layers. beta couples layers p and p+1, lambda are
// the asymptotic relative layer sizes.
class ModelParams {
 public:
  // Throws DomainError unless 1 <= K <= kMaxLayers, beta has K-1 finite
  // entries >= 0, lambda has K entries in [0,1] summing to 1 within 1e-12,
  // and fields is empty (all zero) or has K entries.
  ModelParams(std::vector<double> beta, std::vector<double> lambda,
              std::vector<FieldSpec> fields = {});

  int layers() const noexcept { return static_cast<int>(lambda_.size()); }
  const std::vector<double>& beta() const noexcept { return beta_; }
  const std::vector<double>& lambda() const noexcept { return lambda_; }
  const std::vector<FieldSpec>& fields() const noexcept { return fields_; }

  bool zero_fields() const noexcept;
  // All fields gaussian_centered with strictly positive variance.
  bool positive_gaussian_fields() const noexcept;
  bool positive_lambda() const noexcept;
  bool positive_beta() const noexcept;

  ModelParams with_beta(std::vector<double> beta) const;
  ModelParams with_lambda(std::vector<double> lambda) const;
  ModelParams with_fields(std::vector<FieldSpec> fields) const;

 private:
  std::vector<double> beta_;
  std::vector<double> lambda_;
  std::vector<FieldSpec> fields_;
};

// t_p = 4 lambda_p beta_p^4 lambda_{p+1}.
ActivityVector activities(const ModelParams& params);

// sum_p lambda_p beta_p^2 lambda_{p+1} x_p x_{p+1}, i.e. x^T M1 x / 2.
double half_coupling_form(const ModelParams& params, std::span<const double> x);

// log 2 + sum_p lambda_p beta_p^2 lambda_{p+1}.
double annealed_pressure(const ModelParams& params);

// (M q)_p = 2 lambda_{p-1} beta_{p-1}^2 q_{p-1} + 2 beta_p^2 lambda_{p+1} q_{p+1}.
std::vector<double> apply_m(const ModelParams& params, std::span<const double> q);

// Largest zero of D_K(., t(beta, lambda)); 0 for K = 1.
double spectral_radius(const ModelParams& params);

struct InteractionMatrices {
  Eigen::MatrixXd M0;  // tridiagonal, beta_p^2 off the diagonal
  Eigen::MatrixXd M1;  // diag(lambda) M0 diag(lambda)
  Eigen::MatrixXd M;   // 2 M0 diag(lambda)
};

InteractionMatrices build_matrices(const ModelParams& params);

struct RegionCriteria {
  // a*-recursion; nullopt when some lambda_p beta_p^2 (p < K) or lambda_K
  // vanishes and the recursion is undefined.
  std::optional<RegionState> recursion;
  RegionState chain = RegionState::inside;     // D_p(1, t) > 0, p = 2..K
  RegionState spectral = RegionState::inside;  // rho < 1
};

struct RegionVerdict {
  RegionState in_region = RegionState::inside;
  double rho = 0.0;
  RegionCriteria criteria;
  // z_p = D_p(1, t) for p = 0..K.
  std::vector<double> chain_values;
  // a*_1..a*_{K-1} from the recursion whenever all of them are positive.
  // These satisfy the annealed system with equality in every row but the
  // last, so they witness the closure of the region.
  std::optional<std::vector<double>> a_star;
  // A point satisfying every strict inequality of the system; present
  // whenever the verdict is inside.
  std::optional<std::vector<double>> feasible_a;
};

// Membership in the annealed region, decided by the three equivalent
// criteria. Any criterion within `band` of its threshold makes the verdict
// `boundary`; otherwise the evaluated criteria must agree or
// ConsistencyError is thrown.
RegionVerdict classify_annealed(const ModelParams& params, double band = kBoundaryBand);

// Left-hand sides of the annealed system at a:
//   row 1:  lambda_1 a_1 beta_1^2
//   row p:  lambda_p (beta_{p-1}^2 / a_{p-1} + a_p beta_p^2)
//   row K:  lambda_K beta_{K-1}^2 / a_{K-1}
// These are exactly the theta_p^2 of the variational bound.
std::vector<double> annealed_system_rows(const ModelParams& params, std::span<const double> a);

// Maximal spectral radius over the simplex and where it is attained.
struct MaximizerFamily {
  enum class Shape {
    pair,   // lambda_{p*} = lambda_{p*+1} = 1/2
    triple  // lambda_{p*} = lambda_{p*-1} + lambda_{p*+1} = 1/2
  };
  Shape shape = Shape::pair;
  int p_star = 1;  // 1-based layer index
  int layers = 2;

  // The family member with lambda_{p*-1} = x for triples; x is ignored for
  // pairs. x must lie in [0, 1/2].
  std::vector<double> member(double x = 0.0) const;
};

struct ExtremalLambda {
  double rho_sup = 0.0;  // max_p beta_p^2
  std::vector<MaximizerFamily> families;
};

// Requires K >= 2, i.e. a non-empty beta.
ExtremalLambda extremal_lambda(std::span<const double> beta);

struct LambdaSearch {
  std::vector<double> best_lambda;
  double best_rho = 0.0;
};

// Cross-check of extremal_lambda: `draws` uniform (Dirichlet(1)) points of
// the simplex, then a pairwise mass-transfer hill climb from the best one.
LambdaSearch search_rho_sup(std::span<const double> beta, int draws, std::uint64_t seed);

struct ChainQuadraticBound {
  double lhs = 0.0;  // 4 sum_p b_p x_p x_{p+1}
  double rhs = 0.0;  // max(b) (sum x)^2
  bool equality = false;
};

// Requires x.size() == b.size() + 1 >= 2 and non-negative entries.
ChainQuadraticBound chain_quadratic_bound(std::span<const double> b, std::span<const double> x);

}  // namespace dbm
