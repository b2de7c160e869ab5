// SPDX-License-Identifier: Apache-2.0
#include "dbm/machine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dbm/errors.hpp"
#include "dbm/rng.hpp"

namespace dbm {

ModelParams::ModelParams(std::vector<double> beta, std::vector<double> lambda,
                         std::vector<FieldSpec> fields)
    : beta_(std::move(beta)), lambda_(std::move(lambda)), fields_(std::move(fields)) {
  const std::size_t K = lambda_.size();
  if (K < 1 || K > static_cast<std::size_t>(kMaxLayers)) {
    throw DomainError("params: K must lie in [1, " + std::to_string(kMaxLayers) + "]");
  }
  if (beta_.size() + 1 != K) throw DomainError("params: beta must have K-1 entries");
  for (double b : beta_) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("params: beta must be finite and >= 0");
  }
  double total = 0.0;
  for (double l : lambda_) {
    if (!(l >= 0.0 && l <= 1.0)) throw DomainError("params: lambda entries must lie in [0, 1]");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("params: lambda must sum to 1 within 1e-12");
  }
  if (fields_.empty()) fields_.assign(K, FieldSpec::zero());
  if (fields_.size() != K) throw DomainError("params: fields must have K entries");
}

bool ModelParams::zero_fields() const noexcept {
  return std::all_of(fields_.begin(), fields_.end(),
                     [](const FieldSpec& f) { return f.is_identically_zero(); });
}

bool ModelParams::positive_gaussian_fields() const noexcept {
  return std::all_of(fields_.begin(), fields_.end(), [](const FieldSpec& f) {
    const auto v = f.gaussian_variance();
    return v && *v > 0.0;
  });
}

bool ModelParams::positive_lambda() const noexcept {
  return std::all_of(lambda_.begin(), lambda_.end(), [](double l) { return l > 0.0; });
}

bool ModelParams::positive_beta() const noexcept {
  return std::all_of(beta_.begin(), beta_.end(), [](double b) { return b > 0.0; });
}

ModelParams ModelParams::with_beta(std::vector<double> beta) const {
  return ModelParams(std::move(beta), lambda_, fields_);
}

ModelParams ModelParams::with_lambda(std::vector<double> lambda) const {
  return ModelParams(beta_, std::move(lambda), fields_);
}

ModelParams ModelParams::with_fields(std::vector<FieldSpec> fields) const {
  return ModelParams(beta_, lambda_, std::move(fields));
}

ActivityVector activities(const ModelParams& params) {
  const auto& b = params.beta();
  const auto& l = params.lambda();
  std::vector<double> t(b.size());
  for (std::size_t p = 0; p < b.size(); ++p) {
    const double b2 = b[p] * b[p];
    t[p] = 4.0 * l[p] * b2 * b2 * l[p + 1];
  }
  return ActivityVector(std::move(t));
}

double half_coupling_form(const ModelParams& params, std::span<const double> x) {
  const auto& b = params.beta();
  const auto& l = params.lambda();
  if (x.size() != l.size()) throw DomainError("half_coupling_form: length mismatch");
  double sum = 0.0;
  for (std::size_t p = 0; p < b.size(); ++p) sum += l[p] * b[p] * b[p] * l[p + 1] * x[p] * x[p + 1];
  return sum;
}

double annealed_pressure(const ModelParams& params) {
  const std::vector<double> ones(params.lambda().size(), 1.0);
  return std::numbers::ln2 + half_coupling_form(params, ones);
}

std::vector<double> apply_m(const ModelParams& params, std::span<const double> q) {
  const auto& b = params.beta();
  const auto& l = params.lambda();
  const std::size_t K = l.size();
  if (q.size() != K) throw DomainError("apply_m: length mismatch");
  std::vector<double> out(K, 0.0);
  for (std::size_t p = 0; p + 1 < K; ++p) {
    const double b2 = 2.0 * b[p] * b[p];
    out[p] += b2 * l[p + 1] * q[p + 1];
    out[p + 1] += b2 * l[p] * q[p];
  }
  return out;
}

double spectral_radius(const ModelParams& params) {
  if (params.layers() == 1) return 0.0;
  return zeros(activities(params), params.layers()).largest();
}

InteractionMatrices build_matrices(const ModelParams& params) {
  const int K = params.layers();
  const auto& b = params.beta();
  const Eigen::Map<const Eigen::VectorXd> lambda(params.lambda().data(), K);
  InteractionMatrices m;
  m.M0 = Eigen::MatrixXd::Zero(K, K);
  for (int p = 0; p + 1 < K; ++p) {
    m.M0(p, p + 1) = m.M0(p + 1, p) = b[static_cast<std::size_t>(p)] * b[static_cast<std::size_t>(p)];
  }
  m.M1 = lambda.asDiagonal() * m.M0 * lambda.asDiagonal();
  m.M = 2.0 * m.M0 * lambda.asDiagonal();
  return m;
}

std::vector<double> annealed_system_rows(const ModelParams& params, std::span<const double> a) {
  const std::size_t K = params.lambda().size();
  if (a.size() + 1 != K) throw DomainError("annealed_system_rows: a must have K-1 entries");
  const auto& b = params.beta();
  const auto& l = params.lambda();
  std::vector<double> rows(K, 0.0);
  for (std::size_t p = 0; p < K; ++p) {
    double inner = 0.0;
    if (p > 0) inner += b[p - 1] * b[p - 1] / a[p - 1];
    if (p + 1 < K) inner += a[p] * b[p] * b[p];
    rows[p] = l[p] * inner;
  }
  return rows;
}

namespace {

// First failing entry of a ratio chain decides the state.
RegionState chain_state(std::span<const double> values, double band) {
  for (double v : values) {
    if (v > band) continue;
    return std::abs(v) <= band ? RegionState::boundary : RegionState::outside;
  }
  return RegionState::inside;
}

// Greedy point of the annealed system with every row but the last pinned to
// `target`. Maximizing a_p at each step minimizes all later rows, so the
// system is feasible at level `target` iff this point satisfies the last row.
std::optional<std::vector<double>> greedy_point(const ModelParams& params, double target,
                                                double slack) {
  const std::size_t K = params.lambda().size();
  const auto& b = params.beta();
  const auto& l = params.lambda();
  std::vector<double> a(K - 1, 1.0);
  double carried = 0.0;  // lambda_p beta_{p-1}^2 / a_{p-1}
  for (std::size_t p = 0; p + 1 < K; ++p) {
    if (carried >= target) return std::nullopt;
    const double w = l[p] * b[p] * b[p];
    if (w > 0.0) {
      a[p] = (target - carried) / w;
    } else {
      // Row p does not see a_p: take a_p large enough that the next row
      // receives at most `slack` from it.
      const double next = l[p + 1] * b[p] * b[p];
      a[p] = std::max(1.0, next / slack);
    }
    if (!(a[p] > 0.0) || !std::isfinite(a[p])) return std::nullopt;
    carried = l[p + 1] * b[p] * b[p] / a[p];
  }
  const std::vector<double> rows = annealed_system_rows(params, a);
  for (double r : rows) {
    if (!(r < 0.5)) return std::nullopt;
  }
  return a;
}

std::optional<std::vector<double>> strict_witness(const ModelParams& params) {
  if (params.layers() == 1) return std::vector<double>{};
  for (double delta = 0.25; delta >= 1e-15; delta *= 0.1) {
    if (auto a = greedy_point(params, 0.5 * (1.0 - delta), 0.25 * delta)) return a;
  }
  return std::nullopt;
}

}  // namespace

RegionVerdict classify_annealed(const ModelParams& params, double band) {
  const int K = params.layers();
  const auto& b = params.beta();
  const auto& l = params.lambda();
  const ActivityVector t = activities(params);

  RegionVerdict verdict;
  verdict.rho = spectral_radius(params);
  verdict.criteria.spectral = std::abs(verdict.rho - 1.0) <= band
                                  ? RegionState::boundary
                                  : (verdict.rho < 1.0 ? RegionState::inside : RegionState::outside);

  verdict.chain_values = eval_sequence(1.0, t, K).values;
  verdict.criteria.chain =
      chain_state(std::span<const double>(verdict.chain_values).subspan(1), band);

  // a*-recursion in the scaled variable c_p = beta_p^2 a*_p:
  //   c_1 = 1/(2 lambda_1),  c_p = 1/(2 lambda_p) - beta_{p-1}^4 / c_{p-1}.
  // 2 lambda_p c_p = z_p / z_{p-1} is dimensionless and carries the band.
  bool recursion_defined = l[static_cast<std::size_t>(K) - 1] > 0.0;
  for (int p = 0; p + 1 < K; ++p) {
    recursion_defined = recursion_defined && l[static_cast<std::size_t>(p)] > 0.0 &&
                        b[static_cast<std::size_t>(p)] > 0.0;
  }
  if (recursion_defined) {
    std::vector<double> ratios;
    std::vector<double> a_star;
    double c = 0.0;
    for (int p = 0; p < K; ++p) {
      const auto pu = static_cast<std::size_t>(p);
      if (p == 0) {
        c = 1.0 / (2.0 * l[0]);
      } else {
        const double b2 = b[pu - 1] * b[pu - 1];
        c = 1.0 / (2.0 * l[pu]) - b2 * b2 / c;
      }
      ratios.push_back(2.0 * l[pu] * c);
      if (!(c > 0.0)) break;
      if (p + 1 < K) a_star.push_back(c / (b[pu] * b[pu]));
    }
    verdict.criteria.recursion = chain_state(ratios, band);
    if (a_star.size() + 1 == static_cast<std::size_t>(K) &&
        *verdict.criteria.recursion != RegionState::outside) {
      verdict.a_star = std::move(a_star);
    }
  }

  std::vector<RegionState> states{verdict.criteria.chain, verdict.criteria.spectral};
  if (verdict.criteria.recursion) states.push_back(*verdict.criteria.recursion);
  if (std::find(states.begin(), states.end(), RegionState::boundary) != states.end()) {
    verdict.in_region = RegionState::boundary;
  } else if (std::adjacent_find(states.begin(), states.end(), std::not_equal_to<>()) !=
             states.end()) {
    throw ConsistencyError("classify_annealed: membership criteria disagree");
  } else {
    verdict.in_region = states.front();
  }

  if (verdict.in_region == RegionState::inside) {
    verdict.feasible_a = strict_witness(params);
    if (!verdict.feasible_a) {
      throw ConsistencyError("classify_annealed: inside verdict without a strict witness");
    }
  }
  return verdict;
}

std::vector<double> MaximizerFamily::member(double x) const {
  if (!(x >= 0.0 && x <= 0.5)) throw DomainError("MaximizerFamily: x must lie in [0, 1/2]");
  std::vector<double> lambda(static_cast<std::size_t>(layers), 0.0);
  const auto p = static_cast<std::size_t>(p_star) - 1;
  lambda[p] = 0.5;
  if (shape == Shape::pair) {
    lambda[p + 1] = 0.5;
  } else {
    lambda[p - 1] = x;
    lambda[p + 1] = 0.5 - x;
  }
  return lambda;
}

ExtremalLambda extremal_lambda(std::span<const double> beta) {
  if (beta.empty()) throw DomainError("extremal_lambda: need K >= 2");
  for (double b : beta) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("extremal_lambda: beta must be >= 0");
  }
  const double bmax = *std::max_element(beta.begin(), beta.end());
  const int K = static_cast<int>(beta.size()) + 1;
  ExtremalLambda out;
  out.rho_sup = bmax * bmax;
  for (int p = 1; p < K; ++p) {
    if (beta[static_cast<std::size_t>(p) - 1] == bmax) {
      out.families.push_back({MaximizerFamily::Shape::pair, p, K});
    }
  }
  for (int p = 2; p < K; ++p) {
    if (beta[static_cast<std::size_t>(p) - 2] == bmax && beta[static_cast<std::size_t>(p) - 1] == bmax) {
      out.families.push_back({MaximizerFamily::Shape::triple, p, K});
    }
  }
  return out;
}

LambdaSearch search_rho_sup(std::span<const double> beta, int draws, std::uint64_t seed) {
  if (beta.empty()) throw DomainError("search_rho_sup: need K >= 2");
  if (draws < 1) throw DomainError("search_rho_sup: draws must be positive");
  const std::size_t K = beta.size() + 1;
  const std::vector<double> b(beta.begin(), beta.end());
  auto rho_of = [&](const std::vector<double>& lambda) {
    std::vector<double> t(K - 1);
    for (std::size_t p = 0; p + 1 < K; ++p) {
      const double b2 = b[p] * b[p];
      t[p] = 4.0 * lambda[p] * b2 * b2 * lambda[p + 1];
    }
    return zeros(ActivityVector(std::move(t)), static_cast<int>(K)).largest();
  };

  PhiloxStream rng = make_stream(seed, 0, Stream::simplex);
  LambdaSearch best;
  best.best_rho = -1.0;
  std::vector<double> lambda(K);
  for (int d = 0; d < draws; ++d) {
    double total = 0.0;
    for (double& x : lambda) total += (x = rng.exponential());
    for (double& x : lambda) x /= total;
    const double r = rho_of(lambda);
    if (r > best.best_rho) {
      best.best_rho = r;
      best.best_lambda = lambda;
    }
  }

  // Move mass between pairs of layers while it helps, halving the step when
  // a full pass brings no improvement.
  lambda = best.best_lambda;
  for (double step = 0.25; step > 1e-13;) {
    bool improved = false;
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        if (i == j || lambda[i] <= 0.0) continue;
        std::vector<double> trial = lambda;
        const double moved = std::min(step, trial[i]);
        trial[i] -= moved;
        trial[j] += moved;
        const double r = rho_of(trial);
        if (r > best.best_rho) {
          best.best_rho = r;
          lambda = std::move(trial);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  best.best_lambda = lambda;
  return best;
}

ChainQuadraticBound chain_quadratic_bound(std::span<const double> b, std::span<const double> x) {
  if (x.size() < 2 || x.size() != b.size() + 1) {
    throw DomainError("chain_quadratic_bound: need length(x) = length(b) + 1 >= 2");
  }
  for (double v : b) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("chain_quadratic_bound: b must be >= 0");
  }
  for (double v : x) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("chain_quadratic_bound: x must be >= 0");
  }
  const std::size_t P = x.size();
  double S = 0.0;
  for (double v : x) S += v;
  const double B = *std::max_element(b.begin(), b.end());

  ChainQuadraticBound out;
  for (std::size_t p = 0; p + 1 < P; ++p) out.lhs += b[p] * x[p] * x[p + 1];
  out.lhs *= 4.0;
  out.rhs = B * S * S;

  const double tol = 1e-12 * std::max(S, 1.0);
  auto near = [tol](double u, double v) { return std::abs(u - v) <= tol; };
  auto is_max = [B](double v) { return v >= B * (1.0 - 1e-12); };
  bool equality = B == 0.0 || S == 0.0;
  for (std::size_t p = 0; p + 1 < P && !equality; ++p) {
    equality = near(x[p], S / 2) && near(x[p + 1], S / 2) && is_max(b[p]);
  }
  for (std::size_t p = 1; p + 1 < P && !equality; ++p) {
    equality = near(x[p], S / 2) && near(x[p - 1] + x[p + 1], S / 2) && is_max(b[p - 1]) &&
               is_max(b[p]);
  }
  out.equality = equality;
  return out;
}

}  // namespace dbm
