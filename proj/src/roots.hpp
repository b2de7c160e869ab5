// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <optional>

namespace dbm::detail {

struct Bracket {
  double lo, hi, f_lo, f_hi;
};

// Root of f inside a sign-changing bracket, to an interval of width `width`.
template <class F>
double solve_bracketed(F&& f, const Bracket& b, double width) {
  if (b.f_lo == 0.0) return b.lo;
  if (b.f_hi == 0.0) return b.hi;
  std::uintmax_t iterations = 200;
  auto tol = [width](double x, double y) { return std::abs(y - x) <= width; };
  const auto r = boost::math::tools::toms748_solve(f, b.lo, b.hi, b.f_lo, b.f_hi, tol, iterations);
  return 0.5 * (r.first + r.second);
}

// Walks from x0 in geometrically growing steps until an increasing function
// f changes sign. nullopt if |x| would exceed `limit`; then `edge` holds
// the last point probed.
template <class F>
std::optional<Bracket> expand_increasing(F&& f, double x0, double step, double limit,
                                         double* edge = nullptr) {
  double f0 = f(x0);
  if (f0 == 0.0) return Bracket{x0, x0, 0.0, 0.0};
  const double dir = f0 < 0.0 ? 1.0 : -1.0;
  double x = x0;
  double fx = f0;
  for (;;) {
    double next = x + dir * step;
    if (std::abs(next) > limit) next = dir * limit;
    const double fn = f(next);
    if ((fn >= 0.0) == (dir > 0.0) || fn == 0.0) {
      return dir > 0.0 ? Bracket{x, next, fx, fn} : Bracket{next, x, fn, fx};
    }
    if (std::abs(next) >= limit) {
      if (edge) *edge = next;
      return std::nullopt;
    }
    x = next;
    fx = fn;
    step *= 4.0;
  }
}

}  // namespace dbm::detail
