// SPDX-License-Identifier: Apache-2.0
//
// Finite-N ground truth for the DBM: seeded disorder, exact enumeration and
// Monte Carlo estimates of (1/N) E log Z, covariance of the Hamiltonian and
// the finite-size approach to the annealed pressure.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dbm/machine.hpp"

namespace dbm {

inline constexpr int kMaxExactSpins = 24;
inline constexpr int kMaxMonteCarloSpins = 4096;

struct LayerAssignment {
  std::vector<int> sizes;  // N_1..N_K

  // Largest-remainder rounding of lambda * N; ties go to the lowest layer index.
  static LayerAssignment from_lambda(std::span<const double> lambda, int n);

  int total() const;
  int offset(std::size_t layer) const;
  std::vector<double> fractions() const;  // N_p / N
  void validate(const ModelParams& params) const;
};

// Spins are +1 / -1, laid out layer by layer.
using Spins = std::vector<std::int8_t>;

struct DisorderSample {
  std::vector<Eigen::MatrixXd> couplings;  // block p is N_p x N_{p+1}
  std::vector<double> fields;              // one per spin
  std::uint64_t seed = 0;
  std::uint32_t index = 0;

  // Couplings from Stream::couplings and fields from Stream::fields, both
  // keyed by (seed, index).
  static DisorderSample draw(const LayerAssignment& assignment, const ModelParams& params,
                             std::uint64_t seed, std::uint32_t index);
};

// -(sqrt 2 / sqrt N) sum_p beta_p sum_{i in L_p, j in L_{p+1}} J_ij s_i s_j.
double hamiltonian(const DisorderSample& sample, std::span<const std::int8_t> sigma,
                   const LayerAssignment& assignment, const ModelParams& params);

// q_{L_p}(sigma, tau) = (1/N_p) sum_{i in L_p} sigma_i tau_i; 0 for empty layers.
std::vector<double> layer_overlaps(std::span<const std::int8_t> sigma, std::span<const std::int8_t> tau,
                                   const LayerAssignment& assignment);

// log Z of one sample, field term included. The layers split into odd and
// even classes; the smaller class is enumerated and the other one traced out.
double log_partition_exact(const DisorderSample& sample, const LayerAssignment& assignment,
                           const ModelParams& params);

enum class EstimateMethod { exact_enum, monte_carlo };
const char* to_string(EstimateMethod m) noexcept;

// Zero-mean companion of (1/N) log Z for one sample:
// (1/N^2) sum_p beta_p^2 (sum_ij J_ij^2 - N_p N_{p+1}), the leading
// fluctuation of log Z at small coupling.
double coupling_control(const DisorderSample& sample, const LayerAssignment& assignment,
                        const ModelParams& params);

struct EstimatorOptions {
  unsigned threads = 0;         // 0 = hardware concurrency
  bool control_variate = true;  // average (1/N) log Z - coupling_control
};

struct PressureEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n_samples)
  int n_samples = 0;
  EstimateMethod method = EstimateMethod::exact_enum;
  int non_equilibrated = 0;  // Monte Carlo samples whose energy still drifts
  bool control_variate = false;
  std::vector<double> per_sample;  // (1/N) log Z
  std::vector<double> control;     // coupling_control per sample, when used

  std::string flags() const;  // "" or "non_equilibrated=<count>"
};

// Requires N <= 24 (PreconditionError otherwise, pointing to mc_pressure).
PressureEstimate exact_pressure(const LayerAssignment& assignment, const ModelParams& params,
                                int n_disorder, std::uint64_t seed, const EstimatorOptions& options = {});

struct McConfig {
  int sweeps = 4000;
  int replicas = 21;  // Gauss-Legendre nodes of the integration, also the tempering ladder
  EstimatorOptions options;
};

// Thermodynamic integration of log Z over the coupling scale g in [0, 1]:
// log Z(1) = sum_i log 2 cosh h_i - int_0^1 <H>_g dg, the energies sampled by
// parallel tempering on the Gauss-Legendre nodes. The first 20% of sweeps
// are burn-in; a sample is flagged when the coldest replica's mean energy
// over the last 20% of sweeps drifts by more than 3 standard errors.
PressureEstimate mc_pressure(const LayerAssignment& assignment, const ModelParams& params, int n_disorder,
                             std::uint64_t seed, const McConfig& config = {});

struct CovariancePair {
  std::vector<double> overlaps;
  double expected = 0.0;   // N q^T M1^(N) q
  double empirical = 0.0;  // sample covariance over the disorder
  double std_error = 0.0;
};

// Covariance over n_disorder coupling draws of H(sigma), H(tau).
CovariancePair hamiltonian_covariance(std::span<const std::int8_t> sigma, std::span<const std::int8_t> tau,
                                      const LayerAssignment& assignment, const ModelParams& params,
                                      int n_disorder, std::uint64_t seed);

struct CovarianceReport {
  std::vector<CovariancePair> pairs;
  double max_deviation = 0.0;        // max |empirical - expected|
  double max_standard_errors = 0.0;  // max |empirical - expected| / std_error
};

// Ten random configuration pairs from Stream::configurations.
CovarianceReport covariance_check(const LayerAssignment& assignment, const ModelParams& params,
                                  int n_disorder, std::uint64_t seed, int n_pairs = 10);

struct TrendRow {
  int n = 0;
  PressureEstimate estimate;
  double p_annealed = 0.0;  // log 2 + sum lambda^(N) beta^2 lambda^(N) + E log cosh h
  double gap = 0.0;         // p_annealed - mean
  bool jensen_ok = false;   // mean <= p_annealed + 3 std_error
};

struct TrendReport {
  std::vector<TrendRow> rows;
  bool jensen_ok = false;
  bool gap_decreasing = false;  // gap at the largest N below the gap at the smallest
};

// Requires params strictly inside the annealed region and strictly
// increasing N. N <= 24 uses enumeration, larger N Monte Carlo.
TrendReport annealed_trend(const ModelParams& params, std::span<const LayerAssignment> sizes, int n_disorder,
                           std::uint64_t seed, const McConfig& mc = {});

// Pairwise summation; the result depends only on the order of the values.
double pairwise_sum(std::span<const double> values);

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Each index is processed exactly once; the first exception
// is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dbm
