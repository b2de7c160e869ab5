// SPDX-License-Identifier: Apache-2.0
//
// Variational lower bound for the quenched pressure in terms of K
// independent SK models at effective inverse temperatures theta_p(a).
// The SK pressure is replaced by its replica-symmetric value, which is only
// exact under the per-layer certificates reported alongside.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dbm/rs_solver.hpp"

namespace dbm {

struct ThetaVector {
  std::vector<double> squared;  // theta_p^2
  std::vector<double> theta() const;
};

// theta_1^2 = lambda_1 a_1 beta_1^2,
// theta_p^2 = lambda_p (beta_{p-1}^2 / a_{p-1} + a_p beta_p^2),
// theta_K^2 = lambda_K beta_{K-1}^2 / a_{K-1}; (0) for K = 1.
ThetaVector theta_map(std::span<const double> a, const ModelParams& params);

// E log cosh(z sqrt(2 q theta^2) + h) + theta^2 (1 - q)^2 / 2 + log 2.
double sk_rs_functional(double q, double theta_sq, const FieldSpec& field,
                        const QuadratureRule& rule = QuadratureRule::standard());

// Why the replica-symmetric value of a layer equals its SK pressure.
enum class LayerCertificate {
  talagrand,         // theta^2 < 1/8, any field
  almeida_thouless,  // Gaussian field, theta^2 E sech^4(z sqrt(2 q theta^2 + v)) <= 1/2
  annealed,          // zero field, theta^2 <= 1/2
  none
};
const char* to_string(LayerCertificate c) noexcept;

struct SkSurrogate {
  double theta_sq = 0.0;
  double q = 0.0;      // minimiser of sk_rs_functional over [0, 1]
  double value = 0.0;  // inf_q sk_rs_functional
  LayerCertificate certificate = LayerCertificate::none;
};

SkSurrogate sk_surrogate(double theta_sq, const FieldSpec& field, const SolverConfig& config = {});

struct BoundValue {
  double value = 0.0;
  bool certified = false;
  ThetaVector theta;
  std::vector<SkSurrogate> layers;
};

// sum_p lambda_p p~(theta_p, h_p) - sum_p lambda_p theta_p^2 / 2 + sum_p lambda_p beta_p^2 lambda_{p+1}
// with p~ the replica-symmetric surrogate. `certified` means every layer
// carries a certificate, making the value a true lower bound.
BoundValue p_dbm_functional(std::span<const double> a, const ModelParams& params,
                            const SolverConfig& config = {});

// Same functional with layer p's surrogate evaluated at q_p instead of at
// its minimiser.
double p_dbm_at_overlap(std::span<const double> a, std::span<const double> q,
                        const ModelParams& params,
                        const QuadratureRule& rule = QuadratureRule::standard());

struct LocalMaximum {
  std::vector<double> a;
  double value = 0.0;
};

struct BoundMaximum {
  std::vector<double> a;
  double value = 0.0;
  bool certified = false;
  bool boundary_suspect = false;       // some |log a_p| > 12 at termination
  double stationarity_residual = 0.0;  // max_p |lambda_{p+1} q~_{p+1} / a_p - lambda_p q~_p|
  std::vector<SkSurrogate> layers;
  std::vector<LocalMaximum> local_maxima;  // distinct values over all starts
};

// Multi-start coordinate ascent in log a. Each coordinate step solves the
// one-dimensional stationarity equation lambda_{p+1} q~_{p+1} = a_p lambda_p q~_p
// exactly. Starts: a = 1 plus `random_starts` draws of log a ~ N(0, 1).
BoundMaximum maximize_bound(const ModelParams& params, const SolverConfig& config = {},
                            std::uint64_t seed = 0, int random_starts = 8);

struct BridgeReport {
  bool related = false;          // lambda_p q_p a_p = lambda_{p+1} q_{p+1} within 1e-10
  double relation_residual = 0.0;
  double gap = 0.0;       // p^RS(q) - P(a) with the minimised surrogate
  double gap_at_q = 0.0;  // p^RS(q) - P(a) with layer p's surrogate taken at q_p
};

BridgeReport bridge_check(std::span<const double> q, std::span<const double> a,
                          const ModelParams& params, const SolverConfig& config = {});

}  // namespace dbm
