// SPDX-License-Identifier: Apache-2.0
//
// Replica-symmetric functional of the deep Boltzmann machine, its
// consistency equations q_p = E tanh^2(z sqrt((Mq)_p) + h_p), and the
// stability / Talagrand / Almeida-Thouless checks attached to a solution.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbm/ghquad.hpp"
#include "dbm/machine.hpp"

namespace dbm {

// q in [0,1]^K.
using OverlapVector = std::vector<double>;
// a in (0, inf)^{K-1}.
using AuxVector = std::vector<double>;

struct SolverConfig {
  const QuadratureRule* rule = nullptr;  // nullptr selects QuadratureRule::standard()
  double tol = 1e-10;                    // residual max_p |q_p - F_p(q)|
  double bracket_tol = 1e-12;            // width of final root brackets
  double damping = 0.5;
  int max_iter = 100000;

  const QuadratureRule& quadrature() const { return rule ? *rule : QuadratureRule::standard(); }
};

// Rejects q of the wrong length or with entries outside [0, 1].
void validate_overlap(std::span<const double> q, const ModelParams& params);

// sum_p lambda_p E log cosh(z sqrt((Mq)_p) + h_p) + (1-q)^T M1 (1-q) / 2 + log 2.
double rs_pressure(std::span<const double> q, const ModelParams& params,
                   const QuadratureRule& rule = QuadratureRule::standard());

// F_p(q) = E tanh^2(z sqrt((Mq)_p) + h_p).
OverlapVector rs_map(std::span<const double> q, const ModelParams& params,
                     const QuadratureRule& rule = QuadratureRule::standard());

// max_p |q_p - F_p(q)|.
double rs_residual(std::span<const double> q, const ModelParams& params,
                   const QuadratureRule& rule = QuadratureRule::standard());

// Jacobian of F at q = 0, which is M. Zero fields only (PreconditionError
// otherwise).
Eigen::MatrixXd jacobian_at_zero(const ModelParams& params);

// One-sided second-order differences of rs_map at q = 0:
// (-3 F(0) + 4 F(h e_j) - F(2h e_j)) / (2h).
Eigen::MatrixXd finite_difference_jacobian_at_zero(const ModelParams& params, double h = 1e-5,
                                                   const QuadratureRule& rule = QuadratureRule::standard());

// Smallest solution in [0, 1] of q = E tanh^2(z sqrt(2 q theta^2) + h).
// For zero fields this is 0 when 2 theta^2 <= 1 and the positive root
// otherwise; for any other field the root is unique and positive.
double sk_rs_overlap(double theta_sq, const FieldSpec& field, const SolverConfig& config = {});

// Unique positive solution of q = E tanh^2(z sqrt(2 q beta^2 + v)).
// Requires beta > 0 and v > 0 (DomainError otherwise).
double latala_guerra(double beta, double v, const SolverConfig& config = {});

enum class Certificate { holds, fails, indeterminate };
const char* to_string(Certificate c) noexcept;

// Talagrand's small-coupling condition per layer: (Mq)_p < q_p / 4 when
// q_p > 0, i.e. theta_p^2 < 1/8. Layers with q_p = 0 use theta_p(a)^2 < 1/8
// when a is given and are indeterminate otherwise.
std::vector<Certificate> check_talagrand(std::span<const double> q, const ModelParams& params,
                                         std::optional<std::span<const double>> a = std::nullopt);

// Almeida-Thouless condition per layer for Gaussian fields with v_p > 0:
// (Mq)_p E sech^4(z sqrt((Mq)_p + v_p)) <= q_p. PreconditionError for any
// other field.
std::vector<bool> check_at(std::span<const double> q, const ModelParams& params,
                           const QuadratureRule& rule = QuadratureRule::standard());

// a_p = lambda_{p+1} q_{p+1} / (lambda_p q_p), absent when some lambda_p q_p
// vanishes.
std::optional<AuxVector> aux_from_overlap(std::span<const double> q, const ModelParams& params);

struct RsCertificates {
  std::vector<Certificate> talagrand;
  std::optional<std::vector<bool>> at;  // Gaussian fields only
  std::optional<bool> stable_at_zero;   // zero fields only: rho(M) < 1

  bool talagrand_ok() const noexcept;
  std::optional<bool> at_ok() const noexcept;
};

enum class RsMethod { fixed_point, nested };
const char* to_string(RsMethod m) noexcept;

struct RsSolution {
  OverlapVector q;
  double pressure = 0.0;
  double residual = 0.0;
  RsMethod method = RsMethod::fixed_point;
  int iterations = 0;
  std::optional<AuxVector> a;  // from the overlap correspondence when defined
  RsCertificates certificates;
};

RsCertificates evaluate_certificates(std::span<const double> q, const ModelParams& params,
                                     std::optional<std::span<const double>> a,
                                     const QuadratureRule& rule = QuadratureRule::standard());

// Damped iteration q <- (1 - damping) q + damping F(q) until the residual
// drops below config.tol. Requires every lambda_p > 0 (PreconditionError);
// throws ConvergenceError after config.max_iter iterations.
RsSolution solve_fixed_point(const ModelParams& params, std::span<const double> q0,
                             const SolverConfig& config = {});

// Constructive solver for Gaussian fields: nested monotone root finding for
// the auxiliary variables a, then q_p = q^{SK-RS}(theta_p(a), v_p). Requires
// v_p > 0, lambda_p > 0 and beta_p > 0 (PreconditionError otherwise).
RsSolution solve_nested(const ModelParams& params, const SolverConfig& config = {});

}  // namespace dbm
