// SPDX-License-Identifier: Apache-2.0
//
// Matching polynomials of the linear chain graph with K vertices.
//
// For activities t = (t_1, ..., t_{K-1}) >= 0 the polynomials are defined by
//
//   D_0 = 1,  D_1 = x,  D_{p+1} = x D_p - t_p D_{p-1}.
//
// D_K(x, t) is the monomer-dimer partition function of the chain written in
// the variable x, and the characteristic polynomial of the K x K Jacobi
// matrix with zero diagonal and off-diagonal entries sqrt(t_p). Its zeros are
// real, symmetric about the origin, and weakly interlace those of D_{K-1}.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dbm {

inline constexpr int kMaxLayers = 512;

// Half-width of the band around a threshold inside which numerical
// classification reports `boundary` instead of committing to a side.
inline constexpr double kBoundaryBand = 1e-9;

enum class RegionState { inside, boundary, outside };

const char* to_string(RegionState state) noexcept;

// Non-negative monomer-dimer activities t_1..t_{K-1}.
class ActivityVector {
 public:
  ActivityVector() = default;
  // Throws DomainError on negative or non-finite entries, or on more than
  // kMaxLayers - 1 entries.
  explicit ActivityVector(std::vector<double> t);

  std::span<const double> values() const noexcept { return t_; }
  std::size_t size() const noexcept { return t_.size(); }
  double operator[](std::size_t i) const { return t_[i]; }
  // Largest K this vector supports: size() + 1.
  int max_degree() const noexcept { return static_cast<int>(t_.size()) + 1; }
  // Smallest activity; +inf for the empty vector.
  double min() const noexcept;

 private:
  std::vector<double> t_;
};

struct PolySequence {
  double x = 0.0;
  std::vector<double> values;  // D_0(x), ..., D_K(x)
};

// D_0..D_K at x via the three-term recursion, K = t.max_degree() by default.
// Plain double arithmetic: overflows for large K and |x| (see
// signed_log_sequence).
PolySequence eval_sequence(double x, const ActivityVector& t);
PolySequence eval_sequence(double x, const ActivityVector& t, int K);

// Same recursion with the pair (D_{p-1}, D_p) renormalised by powers of two,
// returning sign and natural log of |D_p| for p = 0..K. Safe up to kMaxLayers.
struct SignedLog {
  int sign = 0;           // -1, 0 or +1
  double log_abs = 0.0;   // -inf when sign == 0
  double value() const noexcept;  // sign * exp(log_abs), may overflow
};
std::vector<SignedLog> signed_log_sequence(double x, const ActivityVector& t, int K);

// Coefficients of D_K in ascending powers of x, from the weighted matching
// numbers of the chain: coefficient of x^{K-2d} is (-1)^d f_{d,K}(t).
std::vector<double> coefficients(const ActivityVector& t, int K);

struct ZeroSet {
  std::vector<double> zeros;  // ascending, with multiplicity
  double largest() const noexcept { return zeros.empty() ? 0.0 : zeros.back(); }
};

// All K zeros of D_K, as eigenvalues of the Jacobi matrix of the chain.
ZeroSet zeros(const ActivityVector& t, int K);

struct InterlacingReport {
  bool weak = true;     // x^{(p)}_i <= x^{(p-1)}_i <= x^{(p)}_{i+1} within tol, all p <= K
  bool strict = true;   // same with strict inequalities (no tolerance)
  double min_gap = 0.0; // smallest signed separation found; negative means a violation
};

InterlacingReport interlacing_report(const ActivityVector& t, int K, double tol);

// True iff the zeros of D_p weakly interlace those of D_{p-1} for every
// p = 2..K within tol; when min t > 0 the interlacing must also be strict.
bool check_interlacing(const ActivityVector& t, int K, double tol);

struct LocalizationReport {
  RegionState by_zeros = RegionState::inside;  // largest zero vs rho
  RegionState by_chain = RegionState::inside;  // signs of D_1(rho)..D_K(rho)
  RegionState joint = RegionState::inside;
  double largest_zero = 0.0;
};

// Whether all zeros of D_K lie in (-rho, rho), decided twice: from the zeros
// directly and from positivity of the chain D_p(rho), p = 1..K. Either route
// landing in the band reports `boundary`. Throws ConsistencyError if one
// route says inside and the other outside.
LocalizationReport localize_zeros(const ActivityVector& t, int K, double rho,
                                  double band = kBoundaryBand);

bool zeros_in_interval(const ActivityVector& t, int K, double rho);

// The four equivalent localisation conditions for a given rho:
//   (i)   zeros of D_K in (-rho, rho)
//   (ii)  zeros of every D_p, p <= K, in (-rho, rho)
//   (iii) D_p(rho) > 0 for p <= K with p = K mod 2
//   (iv)  D_p(rho) > 0 for all p = 1..K
struct ZeroConditions {
  bool zeros_of_last = false;
  bool zeros_of_all = false;
  bool parity_chain = false;
  bool full_chain = false;
  double min_abs_chain = 0.0;  // min_p |D_p(rho)|, for excluding near-boundary cases
};

ZeroConditions zero_conditions(const ActivityVector& t, int K, double rho);

}  // namespace dbm
