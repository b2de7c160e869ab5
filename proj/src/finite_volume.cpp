// SPDX-License-Identifier: Apache-2.0
#include "dbm/finite_volume.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "dbm/errors.hpp"
#include "dbm/ghquad.hpp"
#include "dbm/rng.hpp"

namespace dbm {

LayerAssignment LayerAssignment::from_lambda(std::span<const double> lambda, int n) {
  if (n < 1) throw DomainError("layer assignment: N must be >= 1");
  if (lambda.empty()) throw DomainError("layer assignment: lambda is empty");
  LayerAssignment a;
  std::vector<std::pair<double, std::size_t>> remainders;
  int used = 0;
  for (std::size_t p = 0; p < lambda.size(); ++p) {
    const double exact = lambda[p] * n;
    const double whole = std::floor(exact);
    a.sizes.push_back(static_cast<int>(whole));
    used += static_cast<int>(whole);
    remainders.emplace_back(exact - whole, p);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (int k = 0; k < n - used; ++k) ++a.sizes[remainders[static_cast<std::size_t>(k) % remainders.size()].second];
  return a;
}

int LayerAssignment::total() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }

int LayerAssignment::offset(std::size_t layer) const {
  return std::accumulate(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(layer), 0);
}

std::vector<double> LayerAssignment::fractions() const {
  const double n = total();
  std::vector<double> f;
  for (int s : sizes) f.push_back(s / n);
  return f;
}

void LayerAssignment::validate(const ModelParams& params) const {
  if (static_cast<int>(sizes.size()) != params.layers()) {
    throw DomainError("layer assignment: need one size per layer");
  }
  for (int s : sizes) {
    if (s < 0) throw DomainError("layer assignment: sizes must be >= 0");
  }
  if (total() < 1) throw DomainError("layer assignment: N must be >= 1");
}

namespace {

double draw_field(const FieldSpec& field, PhiloxStream& rng) {
  switch (field.kind()) {
    case FieldSpec::Kind::zero:
      return 0.0;
    case FieldSpec::Kind::point_mass:
      return std::get<PointMassField>(field.law()).h0;
    case FieldSpec::Kind::gaussian_centered:
      return std::sqrt(*field.gaussian_variance()) * rng.normal();
    case FieldSpec::Kind::discrete: {
      const auto& atoms = std::get<DiscreteField>(field.law()).atoms;
      const double u = rng.uniform();
      double c = 0.0;
      for (const FieldAtom& a : atoms) {
        c += a.weight;
        if (u < c) return a.value;
      }
      return atoms.back().value;
    }
  }
  return 0.0;
}

double log_2cosh(double x) {
  const double y = std::abs(x);
  return y + std::log1p(std::exp(-2.0 * y));
}

double coupling_scale(const LayerAssignment& assignment) {
  return std::sqrt(2.0) / std::sqrt(static_cast<double>(assignment.total()));
}

std::vector<Eigen::VectorXd> split(std::span<const std::int8_t> sigma, const LayerAssignment& assignment) {
  if (static_cast<int>(sigma.size()) != assignment.total()) {
    throw DomainError("spin configuration: length must equal N");
  }
  std::vector<Eigen::VectorXd> layers;
  std::size_t at = 0;
  for (int s : assignment.sizes) {
    Eigen::VectorXd v(s);
    for (int i = 0; i < s; ++i, ++at) {
      if (sigma[at] != 1 && sigma[at] != -1) throw DomainError("spin configuration: entries must be +1 or -1");
      v(i) = sigma[at];
    }
    layers.push_back(std::move(v));
  }
  return layers;
}

// Coupling part of -H divided by the scale: sum_p beta_p s_p^T J_p s_{p+1}.
double bilinear(const DisorderSample& sample, const std::vector<Eigen::VectorXd>& s, const ModelParams& params) {
  double e = 0.0;
  for (std::size_t p = 0; p + 1 < s.size(); ++p) {
    if (s[p].size() == 0 || s[p + 1].size() == 0) continue;
    e += params.beta()[p] * s[p].dot(sample.couplings[p] * s[p + 1]);
  }
  return e;
}

// sum_p beta neighbours of layer p at unit coupling scale.
Eigen::VectorXd neighbour_field(const DisorderSample& sample, const std::vector<Eigen::VectorXd>& s,
                                const ModelParams& params, std::size_t p) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(s[p].size());
  if (p > 0 && s[p - 1].size() > 0) f.noalias() += params.beta()[p - 1] * (sample.couplings[p - 1].transpose() * s[p - 1]);
  if (p + 1 < s.size() && s[p + 1].size() > 0) f.noalias() += params.beta()[p] * (sample.couplings[p] * s[p + 1]);
  return f;
}

void check_seed_index(int n_disorder) {
  if (n_disorder < 1) throw DomainError("n_disorder must be >= 1");
}

PressureEstimate summarize(std::vector<double> values, std::vector<double> control, EstimateMethod method) {
  PressureEstimate e;
  e.method = method;
  e.n_samples = static_cast<int>(values.size());
  e.control_variate = !control.empty();
  std::vector<double> y = values;
  for (std::size_t i = 0; i < control.size(); ++i) y[i] -= control[i];
  const double n = e.n_samples;
  e.mean = pairwise_sum(y) / n;
  if (e.n_samples > 1) {
    std::vector<double> dev(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dev[i] = (y[i] - e.mean) * (y[i] - e.mean);
    e.std_error = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
  }
  e.per_sample = std::move(values);
  e.control = std::move(control);
  return e;
}

}  // namespace

DisorderSample DisorderSample::draw(const LayerAssignment& assignment, const ModelParams& params,
                                    std::uint64_t seed, std::uint32_t index) {
  assignment.validate(params);
  DisorderSample d;
  d.seed = seed;
  d.index = index;
  PhiloxStream cr = make_stream(seed, index, Stream::couplings);
  for (std::size_t p = 0; p + 1 < assignment.sizes.size(); ++p) {
    Eigen::MatrixXd J(assignment.sizes[p], assignment.sizes[p + 1]);
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
      for (Eigen::Index j = 0; j < J.cols(); ++j) J(i, j) = cr.normal();
    }
    d.couplings.push_back(std::move(J));
  }
  PhiloxStream fr = make_stream(seed, index, Stream::fields);
  for (std::size_t p = 0; p < assignment.sizes.size(); ++p) {
    for (int i = 0; i < assignment.sizes[p]; ++i) d.fields.push_back(draw_field(params.fields()[p], fr));
  }
  return d;
}

double hamiltonian(const DisorderSample& sample, std::span<const std::int8_t> sigma,
                   const LayerAssignment& assignment, const ModelParams& params) {
  assignment.validate(params);
  return -coupling_scale(assignment) * bilinear(sample, split(sigma, assignment), params);
}

std::vector<double> layer_overlaps(std::span<const std::int8_t> sigma, std::span<const std::int8_t> tau,
                                   const LayerAssignment& assignment) {
  if (sigma.size() != tau.size() || static_cast<int>(sigma.size()) != assignment.total()) {
    throw DomainError("overlaps: configurations must have N entries");
  }
  std::vector<double> q;
  std::size_t at = 0;
  for (int s : assignment.sizes) {
    long sum = 0;
    for (int i = 0; i < s; ++i, ++at) sum += sigma[at] * tau[at];
    q.push_back(s > 0 ? static_cast<double>(sum) / s : 0.0);
  }
  return q;
}

double log_partition_exact(const DisorderSample& sample, const LayerAssignment& assignment,
                           const ModelParams& params) {
  assignment.validate(params);
  const std::size_t K = assignment.sizes.size();
  int count[2] = {0, 0};
  for (std::size_t p = 0; p < K; ++p) count[p % 2] += assignment.sizes[p];
  const std::size_t cls = count[1] < count[0] ? 1 : 0;  // enumerated parity class
  const int bits = count[cls];
  if (bits > kMaxExactSpins) throw PreconditionError("exact enumeration: too many spins");
  const double c = coupling_scale(assignment);

  std::vector<Eigen::VectorXd> s;
  std::vector<Eigen::VectorXd> h;
  std::size_t at = 0;
  for (int n : assignment.sizes) {
    s.emplace_back(Eigen::VectorXd::Ones(n));
    h.emplace_back(Eigen::Map<const Eigen::VectorXd>(sample.fields.data() + at, n));
    at += static_cast<std::size_t>(n);
  }

  const std::uint64_t total = std::uint64_t{1} << bits;
  std::vector<double> exponents(total);
  for (std::uint64_t b = 0; b < total; ++b) {
    int bit = 0;
    double x = 0.0;
    for (std::size_t p = cls; p < K; p += 2) {
      for (Eigen::Index i = 0; i < s[p].size(); ++i, ++bit) s[p](i) = (b >> bit) & 1 ? -1.0 : 1.0;
      x += h[p].dot(s[p]);
    }
    for (std::size_t p = 1 - cls; p < K; p += 2) {
      const Eigen::VectorXd local = h[p] + c * neighbour_field(sample, s, params, p);
      for (Eigen::Index i = 0; i < local.size(); ++i) x += log_2cosh(local(i));
    }
    exponents[b] = x;
  }
  const double top = *std::max_element(exponents.begin(), exponents.end());
  for (double& x : exponents) x = std::exp(x - top);
  return top + std::log(pairwise_sum(exponents));
}

const char* to_string(EstimateMethod m) noexcept {
  return m == EstimateMethod::monte_carlo ? "monte_carlo" : "exact_enum";
}

std::string PressureEstimate::flags() const {
  return non_equilibrated > 0 ? "non_equilibrated=" + std::to_string(non_equilibrated) : "";
}

double coupling_control(const DisorderSample& sample, const LayerAssignment& assignment,
                        const ModelParams& params) {
  const double n = assignment.total();
  double x = 0.0;
  for (std::size_t p = 0; p < sample.couplings.size(); ++p) {
    const double b = params.beta()[p];
    const double count = static_cast<double>(assignment.sizes[p]) * assignment.sizes[p + 1];
    x += b * b * (sample.couplings[p].squaredNorm() - count);
  }
  return x / (n * n);
}

PressureEstimate exact_pressure(const LayerAssignment& assignment, const ModelParams& params, int n_disorder,
                                std::uint64_t seed, const EstimatorOptions& options) {
  assignment.validate(params);
  check_seed_index(n_disorder);
  const int n = assignment.total();
  if (n > kMaxExactSpins) {
    throw PreconditionError("exact_pressure: N = " + std::to_string(n) +
                            " exceeds 24 spins; use mc_pressure for larger systems");
  }
  std::vector<double> values(static_cast<std::size_t>(n_disorder));
  std::vector<double> control(options.control_variate ? values.size() : 0);
  parallel_for(
      values.size(),
      [&](std::size_t i) {
        const auto sample = DisorderSample::draw(assignment, params, seed, static_cast<std::uint32_t>(i));
        values[i] = log_partition_exact(sample, assignment, params) / n;
        if (!control.empty()) control[i] = coupling_control(sample, assignment, params);
      },
      options.threads);
  return summarize(std::move(values), std::move(control), EstimateMethod::exact_enum);
}

namespace {

struct McSampleResult {
  double log_z = 0.0;
  bool drifting = false;
};

McSampleResult mc_log_partition(const DisorderSample& sample, const LayerAssignment& assignment,
                                const ModelParams& params, const McConfig& config, const LegendreRule& ladder) {
  const std::size_t K = assignment.sizes.size();
  const std::size_t R = ladder.nodes.size();
  const double c = coupling_scale(assignment);

  std::vector<Eigen::VectorXd> h;
  std::size_t at = 0;
  double log_z0 = 0.0;
  for (int n : assignment.sizes) {
    h.emplace_back(Eigen::Map<const Eigen::VectorXd>(sample.fields.data() + at, n));
    for (int i = 0; i < n; ++i) log_z0 += log_2cosh(sample.fields[at + static_cast<std::size_t>(i)]);
    at += static_cast<std::size_t>(n);
  }

  PhiloxStream init = make_stream(sample.seed, sample.index, Stream::mc_init);
  PhiloxStream chain = make_stream(sample.seed, sample.index, Stream::mc_chain);
  std::vector<std::vector<Eigen::VectorXd>> state(R);
  for (auto& s : state) {
    for (int n : assignment.sizes) {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = init.uniform() < 0.5 ? -1.0 : 1.0;
      s.push_back(std::move(v));
    }
  }
  std::vector<double> energy(R);
  for (std::size_t k = 0; k < R; ++k) energy[k] = -c * bilinear(sample, state[k], params);

  const int sweeps = config.sweeps;
  const int burn_in = sweeps / 5;
  const int tail_start = sweeps - sweeps / 5;
  std::vector<std::vector<double>> measured(R);
  std::vector<double> tail;

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t k = 0; k < R; ++k) {
      auto& s = state[k];
      const double g = ladder.nodes[k];
      for (std::size_t p = 0; p < K; ++p) {
        if (s[p].size() == 0) continue;
        const Eigen::VectorXd local = h[p] + (g * c) * neighbour_field(sample, s, params, p);
        for (Eigen::Index i = 0; i < local.size(); ++i) {
          const double up = 1.0 / (1.0 + std::exp(-2.0 * local(i)));
          s[p](i) = chain.uniform() < up ? 1.0 : -1.0;
        }
      }
      energy[k] = -c * bilinear(sample, s, params);
    }
    for (std::size_t k = sweep % 2; k + 1 < R; k += 2) {
      const double log_accept = (ladder.nodes[k + 1] - ladder.nodes[k]) * (energy[k + 1] - energy[k]);
      if (log_accept >= 0.0 || chain.uniform() < std::exp(log_accept)) {
        std::swap(state[k], state[k + 1]);
        std::swap(energy[k], energy[k + 1]);
      }
    }
    if (sweep >= burn_in) {
      for (std::size_t k = 0; k < R; ++k) measured[k].push_back(energy[k]);
    }
    if (sweep >= tail_start) tail.push_back(energy[R - 1]);
  }

  McSampleResult r;
  std::vector<double> terms(R);
  for (std::size_t k = 0; k < R; ++k) {
    terms[k] = ladder.weights[k] * pairwise_sum(measured[k]) / static_cast<double>(measured[k].size());
  }
  r.log_z = log_z0 - pairwise_sum(terms);

  // Drift: difference of the tail halves against batch-mean noise.
  constexpr std::size_t kBatches = 10;
  if (tail.size() >= 2 * kBatches) {
    const std::size_t len = tail.size() / kBatches;
    std::vector<double> means(kBatches);
    for (std::size_t b = 0; b < kBatches; ++b) {
      means[b] = pairwise_sum(std::span<const double>(tail).subspan(b * len, len)) / static_cast<double>(len);
    }
    const double mean = pairwise_sum(means) / kBatches;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= kBatches - 1;
    const double first = pairwise_sum(std::span<const double>(means).first(kBatches / 2)) / (kBatches / 2);
    const double second = pairwise_sum(std::span<const double>(means).last(kBatches / 2)) / (kBatches / 2);
    const double sd = std::sqrt(var * 2.0 / (kBatches / 2));
    r.drifting = sd > 0.0 && std::abs(second - first) > 3.0 * sd;
  }
  return r;
}

}  // namespace

PressureEstimate mc_pressure(const LayerAssignment& assignment, const ModelParams& params, int n_disorder,
                             std::uint64_t seed, const McConfig& config) {
  assignment.validate(params);
  check_seed_index(n_disorder);
  const int n = assignment.total();
  if (n > kMaxMonteCarloSpins) throw PreconditionError("mc_pressure: N exceeds 4096 spins");
  if (config.sweeps < 50) throw DomainError("mc_pressure: sweeps must be >= 50");
  if (config.replicas < 2) throw DomainError("mc_pressure: replicas must be >= 2");
  const LegendreRule ladder = gauss_legendre(config.replicas, 0.0, 1.0);

  std::vector<double> values(static_cast<std::size_t>(n_disorder));
  std::vector<double> control(config.options.control_variate ? values.size() : 0);
  std::vector<char> drifting(values.size(), 0);
  parallel_for(
      values.size(),
      [&](std::size_t i) {
        const auto sample = DisorderSample::draw(assignment, params, seed, static_cast<std::uint32_t>(i));
        const auto r = mc_log_partition(sample, assignment, params, config, ladder);
        values[i] = r.log_z / n;
        if (!control.empty()) control[i] = coupling_control(sample, assignment, params);
        drifting[i] = r.drifting;
      },
      config.options.threads);
  PressureEstimate e = summarize(std::move(values), std::move(control), EstimateMethod::monte_carlo);
  e.non_equilibrated = static_cast<int>(std::count(drifting.begin(), drifting.end(), 1));
  return e;
}

CovariancePair hamiltonian_covariance(std::span<const std::int8_t> sigma, std::span<const std::int8_t> tau,
                                      const LayerAssignment& assignment, const ModelParams& params,
                                      int n_disorder, std::uint64_t seed) {
  assignment.validate(params);
  if (n_disorder < 2) throw DomainError("covariance: n_disorder must be >= 2");
  const auto s = split(sigma, assignment);
  const auto t = split(tau, assignment);
  const double c = coupling_scale(assignment);
  const auto n = static_cast<std::size_t>(n_disorder);
  std::vector<double> hs(n);
  std::vector<double> ht(n);
  for (std::size_t d = 0; d < n; ++d) {
    const auto sample = DisorderSample::draw(assignment, params, seed, static_cast<std::uint32_t>(d));
    hs[d] = -c * bilinear(sample, s, params);
    ht[d] = -c * bilinear(sample, t, params);
  }
  const double ms = pairwise_sum(hs) / n_disorder;
  const double mt = pairwise_sum(ht) / n_disorder;
  std::vector<double> prod(n);
  for (std::size_t d = 0; d < n; ++d) prod[d] = (hs[d] - ms) * (ht[d] - mt);
  const double mean_prod = pairwise_sum(prod) / n_disorder;
  std::vector<double> dev(n);
  for (std::size_t d = 0; d < n; ++d) dev[d] = (prod[d] - mean_prod) * (prod[d] - mean_prod);

  CovariancePair r;
  r.overlaps = layer_overlaps(sigma, tau, assignment);
  r.empirical = pairwise_sum(prod) / (n_disorder - 1.0);
  r.std_error = std::sqrt(pairwise_sum(dev) / (n_disorder - 1.0) / n_disorder);
  const auto f = assignment.fractions();
  double form = 0.0;
  for (std::size_t p = 0; p + 1 < f.size(); ++p) {
    const double b = params.beta()[p];
    form += 2.0 * f[p] * b * b * f[p + 1] * r.overlaps[p] * r.overlaps[p + 1];
  }
  r.expected = assignment.total() * form;
  return r;
}

CovarianceReport covariance_check(const LayerAssignment& assignment, const ModelParams& params, int n_disorder,
                                  std::uint64_t seed, int n_pairs) {
  assignment.validate(params);
  const auto n = static_cast<std::size_t>(assignment.total());
  CovarianceReport report;
  for (int k = 0; k < n_pairs; ++k) {
    PhiloxStream rng = make_stream(seed, static_cast<std::uint32_t>(k), Stream::configurations);
    Spins sigma(n);
    Spins tau(n);
    for (auto& x : sigma) x = rng.uniform() < 0.5 ? -1 : 1;
    for (auto& x : tau) x = rng.uniform() < 0.5 ? -1 : 1;
    auto pair = hamiltonian_covariance(sigma, tau, assignment, params, n_disorder, seed);
    const double dev = std::abs(pair.empirical - pair.expected);
    report.max_deviation = std::max(report.max_deviation, dev);
    if (pair.std_error > 0.0) report.max_standard_errors = std::max(report.max_standard_errors, dev / pair.std_error);
    report.pairs.push_back(std::move(pair));
  }
  return report;
}

TrendReport annealed_trend(const ModelParams& params, std::span<const LayerAssignment> sizes, int n_disorder,
                           std::uint64_t seed, const McConfig& mc) {
  if (classify_annealed(params).in_region != RegionState::inside) {
    throw PreconditionError("annealed_trend: parameters are not strictly inside the annealed region");
  }
  if (sizes.empty()) throw DomainError("annealed_trend: no sizes given");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    sizes[i].validate(params);
    if (i > 0 && sizes[i].total() <= sizes[i - 1].total()) {
      throw DomainError("annealed_trend: sizes must be strictly increasing in N");
    }
  }
  std::vector<double> field_term;
  for (const FieldSpec& f : params.fields()) field_term.push_back(expect(kernels::LogCosh{}, 0.0, f));

  TrendReport report;
  report.jensen_ok = true;
  for (const LayerAssignment& a : sizes) {
    TrendRow row;
    row.n = a.total();
    row.estimate = row.n <= kMaxExactSpins ? exact_pressure(a, params, n_disorder, seed, mc.options)
                                           : mc_pressure(a, params, n_disorder, seed, mc);
    const auto f = a.fractions();
    row.p_annealed = annealed_pressure(params.with_lambda(f));
    for (std::size_t p = 0; p < f.size(); ++p) row.p_annealed += f[p] * field_term[p];
    row.gap = row.p_annealed - row.estimate.mean;
    row.jensen_ok = row.estimate.mean <= row.p_annealed + 3.0 * row.estimate.std_error;
    report.jensen_ok = report.jensen_ok && row.jensen_ok;
    report.rows.push_back(std::move(row));
  }
  report.gap_decreasing = report.rows.size() > 1 && report.rows.back().gap < report.rows.front().gap;
  return report;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 8;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace dbm
