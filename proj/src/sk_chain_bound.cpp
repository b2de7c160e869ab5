// SPDX-License-Identifier: Apache-2.0
#include "dbm/sk_chain_bound.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dbm/errors.hpp"
#include "dbm/rng.hpp"
#include "roots.hpp"

namespace dbm {

std::vector<double> ThetaVector::theta() const {
  std::vector<double> out(squared.size());
  std::transform(squared.begin(), squared.end(), out.begin(), [](double s) { return std::sqrt(s); });
  return out;
}

ThetaVector theta_map(std::span<const double> a, const ModelParams& params) {
  const auto& lambda = params.lambda();
  const auto& beta = params.beta();
  const std::size_t K = lambda.size();
  if (a.size() + 1 != K) throw DomainError("theta_map: a must have K-1 entries");
  for (double x : a) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("theta_map: a must be finite and > 0");
  }
  ThetaVector t;
  t.squared.assign(K, 0.0);
  for (std::size_t p = 0; p < K; ++p) {
    double s = 0.0;
    if (p > 0) s += beta[p - 1] * beta[p - 1] / a[p - 1];
    if (p + 1 < K) s += a[p] * beta[p] * beta[p];
    t.squared[p] = lambda[p] * s;
  }
  return t;
}

double sk_rs_functional(double q, double theta_sq, const FieldSpec& field, const QuadratureRule& rule) {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("sk_rs_functional: q must lie in [0, 1]");
  if (!(theta_sq >= 0.0)) throw DomainError("sk_rs_functional: theta^2 must be >= 0");
  const double one_minus = 1.0 - q;
  return expect(kernels::LogCosh{}, 2.0 * q * theta_sq, field, rule) +
         0.5 * theta_sq * one_minus * one_minus + std::numbers::ln2;
}

const char* to_string(LayerCertificate c) noexcept {
  switch (c) {
    case LayerCertificate::talagrand:
      return "talagrand";
    case LayerCertificate::almeida_thouless:
      return "almeida_thouless";
    case LayerCertificate::annealed:
      return "annealed";
    case LayerCertificate::none:
      return "none";
  }
  return "?";
}

namespace {

void require_supported(const FieldSpec& field) {
  const auto kind = field.kind();
  if (kind != FieldSpec::Kind::zero && kind != FieldSpec::Kind::gaussian_centered) {
    throw PreconditionError(std::string("bound: unsupported field kind ") + to_string(kind) +
                            " (zero or gaussian_centered only)");
  }
}

LayerCertificate certify(double theta_sq, double q, const FieldSpec& field, const QuadratureRule& rule) {
  if (theta_sq < 0.125) return LayerCertificate::talagrand;
  const auto v = field.gaussian_variance();
  if (v && *v > 0.0 &&
      theta_sq * expect_centered(kernels::Sech4{}, 2.0 * q * theta_sq + *v, rule) <= 0.5) {
    return LayerCertificate::almeida_thouless;
  }
  if (field.is_identically_zero() && theta_sq <= 0.5) return LayerCertificate::annealed;
  return LayerCertificate::none;
}

double coupling_sum(const ModelParams& params) {
  const auto& lambda = params.lambda();
  const auto& beta = params.beta();
  double s = 0.0;
  for (std::size_t p = 0; p < beta.size(); ++p) s += lambda[p] * beta[p] * beta[p] * lambda[p + 1];
  return s;
}

}  // namespace

SkSurrogate sk_surrogate(double theta_sq, const FieldSpec& field, const SolverConfig& config) {
  const QuadratureRule& rule = config.quadrature();
  SkSurrogate s;
  s.theta_sq = theta_sq;
  s.q = sk_rs_overlap(theta_sq, field, config);
  s.value = sk_rs_functional(s.q, theta_sq, field, rule);
  s.certificate = certify(theta_sq, s.q, field, rule);
  return s;
}

BoundValue p_dbm_functional(std::span<const double> a, const ModelParams& params,
                            const SolverConfig& config) {
  for (const FieldSpec& f : params.fields()) require_supported(f);
  const auto& lambda = params.lambda();
  BoundValue b;
  b.theta = theta_map(a, params);
  b.certified = true;
  double sum = 0.0;
  for (std::size_t p = 0; p < lambda.size(); ++p) {
    const double t2 = b.theta.squared[p];
    b.layers.push_back(sk_surrogate(t2, params.fields()[p], config));
    sum += lambda[p] * (b.layers.back().value - 0.5 * t2);
    b.certified = b.certified && b.layers.back().certificate != LayerCertificate::none;
  }
  b.value = sum + coupling_sum(params);
  return b;
}

double p_dbm_at_overlap(std::span<const double> a, std::span<const double> q, const ModelParams& params,
                        const QuadratureRule& rule) {
  validate_overlap(q, params);
  const auto& lambda = params.lambda();
  const ThetaVector theta = theta_map(a, params);
  double sum = 0.0;
  for (std::size_t p = 0; p < lambda.size(); ++p) {
    const double t2 = theta.squared[p];
    sum += lambda[p] * (sk_rs_functional(q[p], t2, params.fields()[p], rule) - 0.5 * t2);
  }
  return sum + coupling_sum(params);
}

namespace {

constexpr double kLogLimit = 40.0;
constexpr double kSuspectLog = 12.0;

class CoordinateAscent {
 public:
  CoordinateAscent(const ModelParams& params, const SolverConfig& config)
      : params_(params), config_(config), lambda_(params.lambda()) {
    for (double b : params.beta()) beta_sq_.push_back(b * b);
  }

  struct Result {
    std::vector<double> x;
    bool hit_limit = false;
  };

  Result run(std::vector<double> x) const {
    const std::size_t n = x.size();
    Result r;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double moved = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        bool limit = false;
        const double next = coordinate(x, p, limit);
        moved = std::max(moved, std::abs(next - x[p]));
        x[p] = next;
        r.hit_limit = r.hit_limit || limit;
      }
      if (moved < kStepTol) break;
    }
    r.x = std::move(x);
    return r;
  }

  // max_p |lambda_{p+1} q_{p+1} / a_p - lambda_p q_p| at the surrogate overlaps.
  static double stationarity(std::span<const double> a, const std::vector<SkSurrogate>& layers,
                             const std::vector<double>& lambda) {
    double r = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
      r = std::max(r, std::abs(lambda[p + 1] * layers[p + 1].q / a[p] - lambda[p] * layers[p].q));
    }
    return r;
  }

 private:
  static constexpr int kMaxSweeps = 20000;
  static constexpr double kStepTol = 1e-11;

  double theta_sq(const std::vector<double>& x, std::size_t layer) const {
    const std::size_t K = lambda_.size();
    double s = 0.0;
    if (layer > 0) s += beta_sq_[layer - 1] * std::exp(-x[layer - 1]);
    if (layer + 1 < K) s += beta_sq_[layer] * std::exp(x[layer]);
    return lambda_[layer] * s;
  }

  double overlap(double t2, std::size_t layer) const {
    return sk_rs_overlap(t2, params_.fields()[layer], config_);
  }

  // Exact maximiser of the functional in x_p with the others fixed; g is
  // non-increasing in x_p and has the sign of the partial derivative.
  double coordinate(std::vector<double>& x, std::size_t p, bool& limit) const {
    const double saved = x[p];
    auto minus_g = [&](double xp) {
      x[p] = xp;
      const double qp = overlap(theta_sq(x, p), p);
      const double qn = overlap(theta_sq(x, p + 1), p + 1);
      return std::exp(xp) * lambda_[p] * qp - lambda_[p + 1] * qn;
    };
    double edge = 0.0;
    const auto bracket = detail::expand_increasing(minus_g, saved, 1e-3, kLogLimit, &edge);
    double root = edge;
    if (bracket) {
      root = detail::solve_bracketed(minus_g, *bracket, config_.bracket_tol);
    } else {
      limit = true;
    }
    x[p] = saved;
    return root;
  }

  const ModelParams& params_;
  const SolverConfig& config_;
  const std::vector<double>& lambda_;
  std::vector<double> beta_sq_;
};

}  // namespace

BoundMaximum maximize_bound(const ModelParams& params, const SolverConfig& config, std::uint64_t seed,
                            int random_starts) {
  for (const FieldSpec& f : params.fields()) require_supported(f);
  if (random_starts < 0) throw DomainError("maximize_bound: random_starts must be >= 0");
  const std::size_t n = params.beta().size();

  BoundMaximum best;
  bool have_best = false;
  bool best_limit = false;
  const CoordinateAscent ascent(params, config);
  for (int s = 0; s <= random_starts; ++s) {
    std::vector<double> x0(n, 0.0);
    if (s > 0) {
      PhiloxStream rng = make_stream(seed, static_cast<std::uint32_t>(s), Stream::starts);
      for (double& v : x0) v = rng.normal();
    }
    const auto run = ascent.run(std::move(x0));
    std::vector<double> a(n);
    std::transform(run.x.begin(), run.x.end(), a.begin(), [](double v) { return std::exp(v); });
    BoundValue b = p_dbm_functional(a, params, config);

    const bool seen = std::any_of(best.local_maxima.begin(), best.local_maxima.end(),
                                  [&](const LocalMaximum& m) { return std::abs(m.value - b.value) <= 1e-9; });
    if (!seen) best.local_maxima.push_back({a, b.value});

    if (!have_best || b.value > best.value) {
      have_best = true;
      best.a = a;
      best.value = b.value;
      best.certified = b.certified;
      best.layers = std::move(b.layers);
      best_limit = run.hit_limit;
    }
    if (n == 0) break;
  }
  best.stationarity_residual = CoordinateAscent::stationarity(best.a, best.layers, params.lambda());
  best.boundary_suspect = best_limit || std::any_of(best.a.begin(), best.a.end(), [](double v) {
                            return std::abs(std::log(v)) > kSuspectLog;
                          });
  return best;
}

BridgeReport bridge_check(std::span<const double> q, std::span<const double> a, const ModelParams& params,
                          const SolverConfig& config) {
  validate_overlap(q, params);
  const auto& lambda = params.lambda();
  const QuadratureRule& rule = config.quadrature();
  BridgeReport r;
  for (std::size_t p = 0; p + 1 < q.size(); ++p) {
    r.relation_residual =
        std::max(r.relation_residual, std::abs(lambda[p] * q[p] * a[p] - lambda[p + 1] * q[p + 1]));
  }
  r.related = r.relation_residual <= 1e-10;
  const double prs = rs_pressure(q, params, rule);
  r.gap = prs - p_dbm_functional(a, params, config).value;
  r.gap_at_q = prs - p_dbm_at_overlap(a, q, params, rule);
  return r;
}

}  // namespace dbm
