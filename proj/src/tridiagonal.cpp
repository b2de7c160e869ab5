// SPDX-License-Identifier: Apache-2.0
#include "dbm/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbm/errors.hpp"

namespace dbm {

std::vector<double> symmetric_tridiagonal_eigenvalues(std::span<const double> diagonal,
                                                      std::span<const double> off_diagonal) {
  const std::size_t n = diagonal.size();
  if (n == 0) return {};
  if (off_diagonal.size() + 1 != n) {
    throw DomainError("tridiagonal: off-diagonal must have length n-1");
  }

  std::vector<double> d(diagonal.begin(), diagonal.end());
  // e[i] couples rows i and i+1; e[n-1] is scratch.
  std::vector<double> e(n, 0.0);
  std::copy(off_diagonal.begin(), off_diagonal.end(), e.begin());

  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 60;

  for (std::size_t l = 0; l < n; ++l) {
    int sweeps = 0;
    std::size_t m = l;
    do {
      // Look for a negligible off-diagonal element to split the matrix.
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd || std::abs(e[m]) < std::numeric_limits<double>::min()) {
          break;
        }
      }
      if (m == l) break;
      if (++sweeps > kMaxSweeps) {
        throw ConsistencyError("tridiagonal: QL iteration did not converge");
      }

      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0;
      double c = 1.0;
      double p = 0.0;
      bool deflated = false;
      for (std::size_t ii = m; ii-- > l;) {
        const double f = s * e[ii];
        const double b = c * e[ii];
        r = std::hypot(f, g);
        e[ii + 1] = r;
        if (r == 0.0) {
          // Recover from underflow.
          d[ii + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[ii + 1] - p;
        r = (d[ii] - g) * s + 2.0 * c * b;
        p = s * r;
        d[ii + 1] = g + p;
        g = c * r - b;
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }

  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace dbm
