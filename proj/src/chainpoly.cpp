// SPDX-License-Identifier: Apache-2.0
#include "dbm/chainpoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dbm/errors.hpp"
#include "dbm/tridiagonal.hpp"

namespace dbm {

namespace {

void require_degree(const ActivityVector& t, int K) {
  if (K < 1 || K > t.max_degree()) {
    throw DomainError("chainpoly: degree " + std::to_string(K) + " outside [1, " +
                      std::to_string(t.max_degree()) + "]");
  }
}

RegionState classify_against(double value, double threshold, double band) {
  if (std::abs(value - threshold) <= band) return RegionState::boundary;
  return value < threshold ? RegionState::inside : RegionState::outside;
}

}  // namespace

const char* to_string(RegionState state) noexcept {
  switch (state) {
    case RegionState::inside:
      return "inside";
    case RegionState::boundary:
      return "boundary";
    case RegionState::outside:
      return "outside";
  }
  return "?";
}

ActivityVector::ActivityVector(std::vector<double> t) : t_(std::move(t)) {
  if (t_.size() + 1 > static_cast<std::size_t>(kMaxLayers)) {
    throw DomainError("chainpoly: at most " + std::to_string(kMaxLayers - 1) + " activities");
  }
  for (double v : t_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("chainpoly: activities must be finite and non-negative");
    }
  }
}

double ActivityVector::min() const noexcept {
  double m = std::numeric_limits<double>::infinity();
  for (double v : t_) m = std::min(m, v);
  return m;
}

PolySequence eval_sequence(double x, const ActivityVector& t) {
  return eval_sequence(x, t, t.max_degree());
}

PolySequence eval_sequence(double x, const ActivityVector& t, int K) {
  require_degree(t, K);
  PolySequence out;
  out.x = x;
  out.values.resize(static_cast<std::size_t>(K) + 1);
  out.values[0] = 1.0;
  out.values[1] = x;
  for (int p = 1; p < K; ++p) {
    out.values[p + 1] = x * out.values[p] - t[p - 1] * out.values[p - 1];
  }
  return out;
}

double SignedLog::value() const noexcept {
  return sign == 0 ? 0.0 : sign * std::exp(log_abs);
}

std::vector<SignedLog> signed_log_sequence(double x, const ActivityVector& t, int K) {
  require_degree(t, K);
  constexpr int kShift = 256;
  const double hi = std::ldexp(1.0, kShift);
  const double lo = std::ldexp(1.0, -kShift);
  const double ln2 = std::log(2.0);

  std::vector<SignedLog> out(static_cast<std::size_t>(K) + 1);
  auto record = [&](std::size_t p, double v, long exponent) {
    if (v == 0.0) {
      out[p] = {0, -std::numeric_limits<double>::infinity()};
    } else {
      out[p] = {v > 0 ? 1 : -1, std::log(std::abs(v)) + static_cast<double>(exponent) * ln2};
    }
  };

  // (prev, cur) hold D_{p-1}, D_p scaled by 2^{-exponent}.
  double prev = 1.0;
  double cur = x;
  long exponent = 0;
  record(0, prev, 0);
  record(1, cur, 0);
  for (int p = 1; p < K; ++p) {
    const double next = x * cur - t[p - 1] * prev;
    prev = cur;
    cur = next;
    const double scale = std::max(std::abs(prev), std::abs(cur));
    if (scale > hi) {
      prev = std::ldexp(prev, -kShift);
      cur = std::ldexp(cur, -kShift);
      exponent += kShift;
    } else if (scale > 0.0 && scale < lo) {
      prev = std::ldexp(prev, kShift);
      cur = std::ldexp(cur, kShift);
      exponent -= kShift;
    }
    record(static_cast<std::size_t>(p) + 1, cur, exponent);
  }
  return out;
}

std::vector<double> coefficients(const ActivityVector& t, int K) {
  require_degree(t, K);
  // f[k][d]: total weight of d-edge matchings on the chain with k vertices.
  // Vertex k is either unmatched, or matched to k-1 through edge t_{k-1}.
  const std::size_t max_d = static_cast<std::size_t>(K) / 2;
  std::vector<double> f_km2(max_d + 1, 0.0);  // k-2
  std::vector<double> f_km1(max_d + 1, 0.0);  // k-1
  std::vector<double> f_k(max_d + 1, 0.0);
  f_km2[0] = 1.0;  // k = 0
  f_km1[0] = 1.0;  // k = 1
  for (int k = 2; k <= K; ++k) {
    const double w = t[static_cast<std::size_t>(k) - 2];
    f_k[0] = 1.0;
    for (std::size_t d = 1; d <= max_d; ++d) f_k[d] = f_km1[d] + w * f_km2[d - 1];
    std::swap(f_km2, f_km1);
    std::swap(f_km1, f_k);
  }
  const std::vector<double>& f = f_km1;

  std::vector<double> coeffs(static_cast<std::size_t>(K) + 1, 0.0);
  for (std::size_t d = 0; d <= max_d; ++d) {
    coeffs[static_cast<std::size_t>(K) - 2 * d] = (d % 2 == 0 ? 1.0 : -1.0) * f[d];
  }
  return coeffs;
}

ZeroSet zeros(const ActivityVector& t, int K) {
  require_degree(t, K);
  const std::vector<double> diagonal(static_cast<std::size_t>(K), 0.0);
  std::vector<double> off(static_cast<std::size_t>(K) - 1);
  for (std::size_t i = 0; i < off.size(); ++i) off[i] = std::sqrt(t[i]);

  ZeroSet out{symmetric_tridiagonal_eigenvalues(diagonal, off)};
  // The spectrum is symmetric about 0; average each mirrored pair.
  auto& z = out.zeros;
  const std::size_t n = z.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double half = 0.5 * (z[n - 1 - i] - z[i]);
    z[i] = -half;
    z[n - 1 - i] = half;
  }
  if (n % 2 == 1) z[n / 2] = 0.0;
  return out;
}

InterlacingReport interlacing_report(const ActivityVector& t, int K, double tol) {
  require_degree(t, K);
  InterlacingReport report;
  report.min_gap = std::numeric_limits<double>::infinity();
  std::vector<double> previous = zeros(t, 1).zeros;
  for (int p = 2; p <= K; ++p) {
    std::vector<double> current = zeros(t, p).zeros;
    for (std::size_t i = 0; i + 1 < current.size(); ++i) {
      report.min_gap = std::min(report.min_gap, previous[i] - current[i]);
      report.min_gap = std::min(report.min_gap, current[i + 1] - previous[i]);
    }
    previous = std::move(current);
  }
  if (K < 2) report.min_gap = 0.0;
  report.weak = report.min_gap >= -tol;
  report.strict = K < 2 || report.min_gap > 0.0;
  return report;
}

bool check_interlacing(const ActivityVector& t, int K, double tol) {
  if (K < 2) throw DomainError("check_interlacing: K must be at least 2");
  const InterlacingReport report = interlacing_report(t, K, tol);
  double min_t = std::numeric_limits<double>::infinity();
  for (int p = 0; p + 1 < K; ++p) min_t = std::min(min_t, t[static_cast<std::size_t>(p)]);
  // Activities below tol are numerically indistinguishable from zero, where
  // only weak interlacing holds.
  if (min_t > tol) return report.weak && report.strict;
  return report.weak;
}

LocalizationReport localize_zeros(const ActivityVector& t, int K, double rho, double band) {
  if (!(rho > 0.0)) throw DomainError("localize_zeros: rho must be positive");
  LocalizationReport report;
  report.largest_zero = zeros(t, K).largest();
  report.by_zeros = classify_against(report.largest_zero, rho, band);

  const std::vector<SignedLog> chain = signed_log_sequence(rho, t, K);
  const double log_band = std::log(band);
  report.by_chain = RegionState::inside;
  for (int p = 1; p <= K; ++p) {
    const SignedLog& v = chain[static_cast<std::size_t>(p)];
    if (v.sign > 0 && v.log_abs > log_band) continue;
    report.by_chain = (v.sign == 0 || v.log_abs <= log_band) ? RegionState::boundary
                                                             : RegionState::outside;
    break;
  }

  if (report.by_zeros == RegionState::boundary || report.by_chain == RegionState::boundary) {
    report.joint = RegionState::boundary;
  } else if (report.by_zeros != report.by_chain) {
    throw ConsistencyError("localize_zeros: zero location and positivity chain disagree");
  } else {
    report.joint = report.by_zeros;
  }
  return report;
}

bool zeros_in_interval(const ActivityVector& t, int K, double rho) {
  return localize_zeros(t, K, rho).joint == RegionState::inside;
}

ZeroConditions zero_conditions(const ActivityVector& t, int K, double rho) {
  require_degree(t, K);
  ZeroConditions c;
  c.zeros_of_last = zeros(t, K).largest() < rho;
  c.zeros_of_all = true;
  for (int p = 1; p <= K; ++p) c.zeros_of_all = c.zeros_of_all && zeros(t, p).largest() < rho;

  const std::vector<SignedLog> chain = signed_log_sequence(rho, t, K);
  c.parity_chain = true;
  c.full_chain = true;
  c.min_abs_chain = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= K; ++p) {
    const SignedLog& v = chain[static_cast<std::size_t>(p)];
    const bool positive = v.sign > 0;
    c.full_chain = c.full_chain && positive;
    if (p % 2 == K % 2) c.parity_chain = c.parity_chain && positive;
    c.min_abs_chain = std::min(c.min_abs_chain, v.sign == 0 ? 0.0 : std::exp(v.log_abs));
  }
  return c;
}

}  // namespace dbm
