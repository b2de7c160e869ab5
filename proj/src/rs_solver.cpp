// SPDX-License-Identifier: Apache-2.0
#include "dbm/rs_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dbm/errors.hpp"
#include "dbm/sk_chain_bound.hpp"
#include "roots.hpp"

namespace dbm {

namespace {

// Smallest root in [0, 1] of q - E tanh^2(z sqrt(2 q theta^2) + h).
template <class Expect>
double overlap_root(double theta_sq, bool zero_field, Expect&& tanh2_at, double width) {
  auto g = [&](double q) { return q - tanh2_at(2.0 * q * theta_sq); };
  double lo = 0.0;
  if (zero_field) {
    if (2.0 * theta_sq <= 1.0) return 0.0;
    // g < 0 just above 0, since F'(0) = 2 theta^2 > 1.
    lo = 0.5;
    while (g(lo) >= 0.0) {
      lo *= 0.5;
      if (lo < 1e-300) return 0.0;
    }
  }
  return detail::solve_bracketed(g, {lo, 1.0, g(lo), g(1.0)}, width);
}

double gaussian_overlap(double theta_sq, double v, const QuadratureRule& rule, double width) {
  return overlap_root(
      theta_sq, v == 0.0,
      [&](double s) { return expect_centered(kernels::Tanh2{}, s + v, rule); }, width);
}

void require_zero_fields(const ModelParams& params, const char* what) {
  if (!params.zero_fields()) {
    throw PreconditionError(std::string(what) + ": only defined for zero fields");
  }
}

}  // namespace

void validate_overlap(std::span<const double> q, const ModelParams& params) {
  if (q.size() != params.lambda().size()) throw DomainError("overlap: q must have K entries");
  for (double x : q) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("overlap: entries must lie in [0, 1]");
  }
}

double rs_pressure(std::span<const double> q, const ModelParams& params, const QuadratureRule& rule) {
  validate_overlap(q, params);
  const std::vector<double> mq = apply_m(params, q);
  const auto& lambda = params.lambda();
  double sum = 0.0;
  for (std::size_t p = 0; p < q.size(); ++p) {
    if (lambda[p] == 0.0) continue;
    sum += lambda[p] * expect(kernels::LogCosh{}, std::max(mq[p], 0.0), params.fields()[p], rule);
  }
  std::vector<double> one_minus(q.size());
  for (std::size_t p = 0; p < q.size(); ++p) one_minus[p] = 1.0 - q[p];
  return sum + half_coupling_form(params, one_minus) + std::numbers::ln2;
}

OverlapVector rs_map(std::span<const double> q, const ModelParams& params, const QuadratureRule& rule) {
  validate_overlap(q, params);
  const std::vector<double> mq = apply_m(params, q);
  OverlapVector out(q.size());
  for (std::size_t p = 0; p < q.size(); ++p) {
    out[p] = expect(kernels::Tanh2{}, std::max(mq[p], 0.0), params.fields()[p], rule);
  }
  return out;
}

double rs_residual(std::span<const double> q, const ModelParams& params, const QuadratureRule& rule) {
  const OverlapVector f = rs_map(q, params, rule);
  double r = 0.0;
  for (std::size_t p = 0; p < q.size(); ++p) r = std::max(r, std::abs(q[p] - f[p]));
  return r;
}

Eigen::MatrixXd jacobian_at_zero(const ModelParams& params) {
  require_zero_fields(params, "jacobian_at_zero");
  return build_matrices(params).M;
}

Eigen::MatrixXd finite_difference_jacobian_at_zero(const ModelParams& params, double h,
                                                   const QuadratureRule& rule) {
  require_zero_fields(params, "finite_difference_jacobian_at_zero");
  if (!(h > 0.0 && h <= 0.25)) throw DomainError("finite differences: step must lie in (0, 1/4]");
  const int K = params.layers();
  const std::vector<double> zero(static_cast<std::size_t>(K), 0.0);
  const OverlapVector f0 = rs_map(zero, params, rule);
  Eigen::MatrixXd J(K, K);
  for (int j = 0; j < K; ++j) {
    std::vector<double> q1 = zero;
    std::vector<double> q2 = zero;
    q1[static_cast<std::size_t>(j)] = h;
    q2[static_cast<std::size_t>(j)] = 2.0 * h;
    const OverlapVector f1 = rs_map(q1, params, rule);
    const OverlapVector f2 = rs_map(q2, params, rule);
    for (int i = 0; i < K; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      J(i, j) = (-3.0 * f0[iu] + 4.0 * f1[iu] - f2[iu]) / (2.0 * h);
    }
  }
  return J;
}

double sk_rs_overlap(double theta_sq, const FieldSpec& field, const SolverConfig& config) {
  if (!(theta_sq >= 0.0) || !std::isfinite(theta_sq)) {
    throw DomainError("sk_rs_overlap: theta^2 must be finite and >= 0");
  }
  const QuadratureRule& rule = config.quadrature();
  if (const auto v = field.gaussian_variance()) {
    return gaussian_overlap(theta_sq, *v, rule, config.bracket_tol);
  }
  return overlap_root(
      theta_sq, field.is_identically_zero(),
      [&](double s) { return expect(kernels::Tanh2{}, s, field, rule); }, config.bracket_tol);
}

double latala_guerra(double beta, double v, const SolverConfig& config) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("latala_guerra: beta must be > 0");
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("latala_guerra: v must be > 0");
  const QuadratureRule& rule = config.quadrature();
  const double b2 = beta * beta;
  const double q = gaussian_overlap(b2, v, rule, config.bracket_tol);
  const double residual = std::abs(q - expect_centered(kernels::Tanh2{}, 2.0 * q * b2 + v, rule));
  if (!(residual < config.tol)) {
    throw ConvergenceError("latala_guerra: residual above tolerance", {q}, residual);
  }
  return q;
}

const char* to_string(Certificate c) noexcept {
  switch (c) {
    case Certificate::holds:
      return "holds";
    case Certificate::fails:
      return "fails";
    case Certificate::indeterminate:
      return "indeterminate";
  }
  return "?";
}

const char* to_string(RsMethod m) noexcept {
  return m == RsMethod::nested ? "nested" : "fixed_point";
}

std::vector<Certificate> check_talagrand(std::span<const double> q, const ModelParams& params,
                                         std::optional<std::span<const double>> a) {
  validate_overlap(q, params);
  const std::vector<double> mq = apply_m(params, q);
  std::optional<ThetaVector> theta;
  if (a) theta = theta_map(*a, params);
  std::vector<Certificate> flags(q.size(), Certificate::indeterminate);
  for (std::size_t p = 0; p < q.size(); ++p) {
    if (q[p] > 0.0) {
      flags[p] = mq[p] < 0.25 * q[p] ? Certificate::holds : Certificate::fails;
    } else if (theta) {
      flags[p] = theta->squared[p] < 0.125 ? Certificate::holds : Certificate::fails;
    }
  }
  return flags;
}

std::vector<bool> check_at(std::span<const double> q, const ModelParams& params,
                           const QuadratureRule& rule) {
  validate_overlap(q, params);
  if (!params.positive_gaussian_fields()) {
    throw PreconditionError("check_at: requires gaussian_centered fields with v > 0");
  }
  const std::vector<double> mq = apply_m(params, q);
  std::vector<bool> flags(q.size());
  for (std::size_t p = 0; p < q.size(); ++p) {
    const double v = *params.fields()[p].gaussian_variance();
    flags[p] = mq[p] * expect_centered(kernels::Sech4{}, mq[p] + v, rule) <= q[p];
  }
  return flags;
}

std::optional<AuxVector> aux_from_overlap(std::span<const double> q, const ModelParams& params) {
  validate_overlap(q, params);
  const auto& lambda = params.lambda();
  AuxVector a(q.size() - 1);
  for (std::size_t p = 0; p + 1 < q.size(); ++p) {
    const double num = lambda[p + 1] * q[p + 1];
    const double den = lambda[p] * q[p];
    if (!(num > 0.0) || !(den > 0.0)) return std::nullopt;
    a[p] = num / den;
  }
  return a;
}

bool RsCertificates::talagrand_ok() const noexcept {
  return std::all_of(talagrand.begin(), talagrand.end(),
                     [](Certificate c) { return c == Certificate::holds; });
}

std::optional<bool> RsCertificates::at_ok() const noexcept {
  if (!at) return std::nullopt;
  return std::all_of(at->begin(), at->end(), [](bool b) { return b; });
}

RsCertificates evaluate_certificates(std::span<const double> q, const ModelParams& params,
                                     std::optional<std::span<const double>> a,
                                     const QuadratureRule& rule) {
  RsCertificates c;
  c.talagrand = check_talagrand(q, params, a);
  if (params.positive_gaussian_fields()) c.at = check_at(q, params, rule);
  if (params.zero_fields()) c.stable_at_zero = spectral_radius(params) < 1.0;
  return c;
}

namespace {

void finish(RsSolution& s, const ModelParams& params, const QuadratureRule& rule) {
  s.pressure = rs_pressure(s.q, params, rule);
  s.residual = rs_residual(s.q, params, rule);
  if (!s.a) s.a = aux_from_overlap(s.q, params);
  std::optional<std::span<const double>> a;
  if (s.a) a = std::span<const double>(*s.a);
  s.certificates = evaluate_certificates(s.q, params, a, rule);
}

}  // namespace

RsSolution solve_fixed_point(const ModelParams& params, std::span<const double> q0,
                             const SolverConfig& config) {
  if (!params.positive_lambda()) {
    throw PreconditionError(
        "solve_fixed_point: some lambda_p = 0; prune the empty layers before solving");
  }
  if (!(config.damping > 0.0 && config.damping <= 1.0)) {
    throw DomainError("solve_fixed_point: damping must lie in (0, 1]");
  }
  validate_overlap(q0, params);
  const QuadratureRule& rule = config.quadrature();
  const double d = config.damping;

  RsSolution s;
  s.method = RsMethod::fixed_point;
  s.q.assign(q0.begin(), q0.end());
  double residual = 0.0;
  for (int it = 0;; ++it) {
    const OverlapVector f = rs_map(s.q, params, rule);
    residual = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) residual = std::max(residual, std::abs(s.q[p] - f[p]));
    if (residual < config.tol) {
      s.iterations = it;
      break;
    }
    if (it >= config.max_iter) {
      throw ConvergenceError("solve_fixed_point: no convergence within max_iter", s.q, residual);
    }
    for (std::size_t p = 0; p < f.size(); ++p) s.q[p] = (1.0 - d) * s.q[p] + d * f[p];
  }
  finish(s, params, rule);
  return s;
}

namespace {

// Level p (0-based, p <= K-2) solves, for a given a_{p+1},
//   Q_1(a_1) a_1 ... a_p = Q_{p+1}(1/a_p, a_{p+1})
// in x = log a_p, with a_1..a_{p-1} given by the lower levels. Every level
// warm-starts from its previous root.
class NestedLevels {
 public:
  NestedLevels(const ModelParams& params, const SolverConfig& config)
      : lambda_(params.lambda()),
        K_(lambda_.size()),
        rule_(config.quadrature()),
        width_(config.bracket_tol),
        a_(K_ - 1, 1.0),
        warm_(K_ - 1, 0.0),
        prefix_(K_ - 1, 0.0) {
    for (double b : params.beta()) beta_sq_.push_back(b * b);
    for (const FieldSpec& f : params.fields()) v_.push_back(*f.gaussian_variance());
  }

  const std::vector<double>& solve() {
    level(K_ - 2, 0.0);
    return a_;
  }

 private:
  double weighted_overlap(std::size_t layer, double theta_sq) const {
    return lambda_[layer] * gaussian_overlap(theta_sq, v_[layer], rule_, width_);
  }

  // Returns Q_1(a_1) a_1 ... a_p at the root; a_[0..p] hold the solution.
  double level(std::size_t p, double a_next) {
    auto phi = [&](double x) {
      const double ap = std::exp(x);
      const double below =
          p == 0 ? weighted_overlap(0, lambda_[0] * beta_sq_[0] * ap) : level(p - 1, ap);
      prefix_[p] = below * ap;
      double theta_sq = beta_sq_[p] / ap;
      if (p + 2 < K_) theta_sq += beta_sq_[p + 1] * a_next;
      theta_sq *= lambda_[p + 1];
      return std::log(prefix_[p]) - std::log(weighted_overlap(p + 1, theta_sq));
    };
    const auto bracket = detail::expand_increasing(phi, warm_[p], 0.05, 700.0);
    if (!bracket) throw ConsistencyError("solve_nested: failed to bracket a level root");
    const double x = detail::solve_bracketed(phi, *bracket, width_);
    phi(x);  // leave the lower levels at the root
    warm_[p] = x;
    a_[p] = std::exp(x);
    return prefix_[p];
  }

  const std::vector<double>& lambda_;
  std::size_t K_;
  const QuadratureRule& rule_;
  double width_;
  std::vector<double> beta_sq_;
  std::vector<double> v_;
  std::vector<double> a_;
  std::vector<double> warm_;
  std::vector<double> prefix_;
};

}  // namespace

RsSolution solve_nested(const ModelParams& params, const SolverConfig& config) {
  if (!params.positive_gaussian_fields()) {
    throw PreconditionError("solve_nested: requires gaussian_centered fields with v > 0");
  }
  if (!params.positive_lambda()) {
    throw PreconditionError("solve_nested: some lambda_p = 0; prune the empty layers before solving");
  }
  if (!params.positive_beta()) throw PreconditionError("solve_nested: requires beta_p > 0");

  const QuadratureRule& rule = config.quadrature();
  const std::size_t K = params.lambda().size();
  RsSolution s;
  s.method = RsMethod::nested;
  AuxVector a;
  if (K > 1) a = NestedLevels(params, config).solve();
  const ThetaVector theta = theta_map(a, params);
  s.q.resize(K);
  for (std::size_t p = 0; p < K; ++p) {
    s.q[p] = gaussian_overlap(theta.squared[p], *params.fields()[p].gaussian_variance(), rule,
                              config.bracket_tol);
  }
  s.a = std::move(a);
  finish(s, params, rule);
  return s;
}

}  // namespace dbm
