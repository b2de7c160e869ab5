#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "dbm/errors.hpp"
#include "dbm/finite_volume.hpp"
#include "dbm/ghquad.hpp"
#include "support.hpp"

using dbm::DisorderSample;
using dbm::FieldSpec;
using dbm::LayerAssignment;
using dbm::ModelParams;

namespace {

// Plain sum over all 2^N configurations of exp(-H + h.sigma), with H coded
// from the coupling blocks directly.
double brute_force_log_z(const DisorderSample& d, const LayerAssignment& a, const ModelParams& p) {
  const int n = a.total();
  const double scale = std::sqrt(2.0 / n);
  std::vector<double> terms;
  for (long b = 0; b < (1L << n); ++b) {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = (b >> i) & 1 ? -1 : 1;
    double minus_h = 0.0;
    for (std::size_t l = 0; l + 1 < a.sizes.size(); ++l) {
      const int o1 = a.offset(l);
      const int o2 = a.offset(l + 1);
      for (int i = 0; i < a.sizes[l]; ++i) {
        for (int j = 0; j < a.sizes[l + 1]; ++j) {
          minus_h += scale * p.beta()[l] * d.couplings[l](i, j) * s[static_cast<std::size_t>(o1 + i)] *
                     s[static_cast<std::size_t>(o2 + j)];
        }
      }
    }
    double field = 0.0;
    for (int i = 0; i < n; ++i) field += d.fields[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
    terms.push_back(minus_h + field);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  long double z = 0.0L;
  for (double t : terms) z += std::exp(static_cast<long double>(t - top));
  return top + static_cast<double>(std::log(z));
}

std::vector<FieldSpec> gaussian_fields(std::size_t k, double v) { return std::vector<FieldSpec>(k, FieldSpec::gaussian(v)); }

}  // namespace

TEST_CASE("layer assignment") {
  const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(LayerAssignment::from_lambda(third, 12).sizes == std::vector<int>{4, 4, 4});
  CHECK(LayerAssignment::from_lambda(third, 13).sizes == std::vector<int>{5, 4, 4});
  const std::vector<double> half{0.5, 0.5};
  CHECK(LayerAssignment::from_lambda(half, 3).sizes == std::vector<int>{2, 1});
  const std::vector<double> q{0.25, 0.25, 0.5};
  CHECK(LayerAssignment::from_lambda(q, 5).sizes == std::vector<int>{1, 1, 3});
  testing::Rand rng(31);
  for (int i = 0; i < 200; ++i) {
    const auto lambda = rng.simplex(static_cast<std::size_t>(rng.integer(1, 9)));
    const int n = rng.integer(1, 500);
    const auto a = LayerAssignment::from_lambda(lambda, n);
    CHECK(a.total() == n);
    for (std::size_t p = 0; p < lambda.size(); ++p) CHECK(std::abs(a.sizes[p] - lambda[p] * n) < 1.0);
  }
  CHECK_THROWS_AS(LayerAssignment::from_lambda(half, 0), dbm::DomainError);
}

TEST_CASE("hamiltonian examples") {
  const ModelParams p({0.7}, {0.5, 0.5});
  const LayerAssignment one{{1, 1}};
  DisorderSample d;
  d.couplings = {Eigen::MatrixXd::Constant(1, 1, 1.9)};
  d.fields = {0.0, 0.0};
  const dbm::Spins up{1, 1};
  CHECK(dbm::hamiltonian(d, up, one, p) == doctest::Approx(-0.7 * 1.9).epsilon(1e-15));

  d.couplings = {Eigen::MatrixXd::Zero(1, 1)};
  CHECK(dbm::hamiltonian(d, up, one, p) == 0.0);

  const LayerAssignment a{{3, 4}};
  const auto sample = DisorderSample::draw(a, p, 5, 0);
  dbm::Spins s{1, -1, 1, 1, 1, -1, -1};
  const double h = dbm::hamiltonian(sample, s, a, p);
  for (int i = 3; i < 7; ++i) s[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(-s[static_cast<std::size_t>(i)]);
  CHECK(dbm::hamiltonian(sample, s, a, p) == doctest::Approx(-h).epsilon(1e-15));

  const dbm::Spins wrong{1, 1, 1};
  CHECK_THROWS_AS(dbm::hamiltonian(sample, wrong, a, p), dbm::DomainError);
}

TEST_CASE("overlaps") {
  const LayerAssignment a{{3, 5, 2}};
  testing::Rand rng(32);
  for (int i = 0; i < 100; ++i) {
    dbm::Spins s(10), t(10);
    for (auto& x : s) x = rng.uniform() < 0.5 ? -1 : 1;
    for (auto& x : t) x = rng.uniform() < 0.5 ? -1 : 1;
    for (double q : dbm::layer_overlaps(s, t, a)) {
      CHECK(q >= -1.0);
      CHECK(q <= 1.0);
    }
    for (double q : dbm::layer_overlaps(s, s, a)) CHECK(q == 1.0);
  }
}

TEST_CASE("disorder samples are reproducible") {
  const ModelParams p({1.0, 0.5}, {0.3, 0.3, 0.4}, gaussian_fields(3, 0.5));
  const LayerAssignment a{{4, 3, 5}};
  const auto x = DisorderSample::draw(a, p, 99, 4);
  const auto y = DisorderSample::draw(a, p, 99, 4);
  const auto z = DisorderSample::draw(a, p, 99, 5);
  CHECK(x.couplings[0] == y.couplings[0]);
  CHECK(x.couplings[1] == y.couplings[1]);
  CHECK(x.fields == y.fields);
  CHECK(x.couplings[0] != z.couplings[0]);
  CHECK(x.couplings[0].rows() == 4);
  CHECK(x.couplings[0].cols() == 3);
  CHECK(x.fields.size() == 12);

  const ModelParams d({1.0}, {0.5, 0.5}, {FieldSpec::discrete({{-1.0, 0.25}, {2.0, 0.75}}), FieldSpec::point_mass(0.3)});
  const LayerAssignment b{{2000, 3}};
  const auto s = DisorderSample::draw(b, d, 1, 0);
  int twos = 0;
  for (int i = 0; i < 2000; ++i) {
    CHECK((s.fields[static_cast<std::size_t>(i)] == -1.0 || s.fields[static_cast<std::size_t>(i)] == 2.0));
    twos += s.fields[static_cast<std::size_t>(i)] == 2.0;
  }
  CHECK(std::abs(twos - 1500) < 100);
  CHECK(s.fields[2000] == 0.3);
}

TEST_CASE("exact enumeration matches brute force") {
  const ModelParams p({1.3}, {0.5, 0.5});
  const LayerAssignment a{{2, 2}};
  const auto d = DisorderSample::draw(a, p, 2024, 0);
  CHECK(std::abs(dbm::log_partition_exact(d, a, p) - brute_force_log_z(d, a, p)) < 1e-12);

  testing::Rand rng(33);
  for (int i = 0; i < 30; ++i) {
    const int K = rng.integer(1, 4);
    const auto Ku = static_cast<std::size_t>(K);
    const ModelParams q(rng.uniforms(Ku - 1, 0.0, 2.0), rng.simplex(Ku),
                        i % 2 ? gaussian_fields(Ku, rng.uniform(0.1, 2.0)) : std::vector<FieldSpec>{});
    LayerAssignment b;
    for (int k = 0; k < K; ++k) b.sizes.push_back(rng.integer(0, 4));
    if (b.total() == 0) b.sizes[0] = 1;
    const auto s = DisorderSample::draw(b, q, 7, static_cast<std::uint32_t>(i));
    const double ref = brute_force_log_z(s, b, q);
    CHECK(std::abs(dbm::log_partition_exact(s, b, q) - ref) < 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("exact pressure examples") {
  const ModelParams zero({0.0, 0.0}, {0.3, 0.3, 0.4});
  const auto e = dbm::exact_pressure({{3, 3, 4}}, zero, 5, 1);
  CHECK(e.mean == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(e.std_error < 1e-15);
  CHECK(e.n_samples == 5);

  const ModelParams free({0.0}, {0.5, 0.5}, gaussian_fields(2, 0.8));
  const LayerAssignment a{{5, 5}};
  const auto f = dbm::exact_pressure(a, free, 20, 3);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto d = DisorderSample::draw(a, free, 3, static_cast<std::uint32_t>(i));
    double s = 0.0;
    for (double h : d.fields) s += std::log(std::cosh(h));
    CHECK(std::abs(f.per_sample[i] - (std::numbers::ln2 + s / 10)) < 1e-14);
  }
  CHECK(f.std_error > 0.0);

  const ModelParams k1({}, {1.0}, {FieldSpec::gaussian(0.5)});
  CHECK_NOTHROW(dbm::exact_pressure({{12}}, k1, 3, 1));

  CHECK_THROWS_AS(dbm::exact_pressure({{13, 12}}, ModelParams({1.0}, {0.5, 0.5}), 2, 1), dbm::PreconditionError);
}

TEST_CASE("gauge symmetry at zero field") {
  const ModelParams p({1.2, 0.9, 1.1}, {0.25, 0.25, 0.25, 0.25});
  const LayerAssignment a{{4, 3, 4, 3}};
  for (std::uint32_t i = 0; i < 10; ++i) {
    auto d = DisorderSample::draw(a, p, 77, i);
    const double before = dbm::log_partition_exact(d, a, p);
    // Flipping layer 2 maps Z onto the same sum with blocks 1 and 2 negated;
    // a single negated coupling is not a gauge transformation.
    d.couplings[0] = -d.couplings[0];
    d.couplings[1] = -d.couplings[1];
    CHECK(std::abs(dbm::log_partition_exact(d, a, p) - before) < 1e-12);
    d.couplings[2](0, 0) = -d.couplings[2](0, 0);
    CHECK(std::abs(dbm::log_partition_exact(d, a, p) - before) > 1e-9);
  }
}

TEST_CASE("Jensen bound on estimates") {
  testing::Rand rng(34);
  for (int i = 0; i < 12; ++i) {
    const int K = rng.integer(2, 4);
    const auto Ku = static_cast<std::size_t>(K);
    const ModelParams p(rng.uniforms(Ku - 1, 0.1, 2.5), rng.simplex(Ku));
    const auto a = LayerAssignment::from_lambda(p.lambda(), 14);
    const auto e = dbm::exact_pressure(a, p, 30, static_cast<std::uint64_t>(i));
    const double bound = dbm::annealed_pressure(p.with_lambda(a.fractions()));
    CHECK(e.mean <= bound + 3 * e.std_error);
  }
}

TEST_CASE("estimates do not depend on the number of threads") {
  const ModelParams p({1.0, 0.8}, {0.3, 0.4, 0.3}, gaussian_fields(3, 0.3));
  const LayerAssignment a{{4, 5, 4}};
  const auto serial = dbm::exact_pressure(a, p, 16, 5, {1, true});
  const auto threaded = dbm::exact_pressure(a, p, 16, 5, {4, true});
  CHECK(serial.per_sample == threaded.per_sample);
  CHECK(serial.mean == threaded.mean);
  CHECK(serial.std_error == threaded.std_error);

  dbm::McConfig one{300, 9, {1, true}};
  dbm::McConfig four{300, 9, {4, true}};
  const auto m1 = dbm::mc_pressure(a, p, 4, 5, one);
  const auto m4 = dbm::mc_pressure(a, p, 4, 5, four);
  CHECK(m1.per_sample == m4.per_sample);
}

TEST_CASE("Monte Carlo agrees with enumeration") {
  const ModelParams p({1.0}, {0.5, 0.5});
  const LayerAssignment a{{8, 8}};
  const auto exact = dbm::exact_pressure(a, p, 12, 9);
  const auto mc = dbm::mc_pressure(a, p, 12, 9, {2000, 21, {}});
  const double combined = std::hypot(exact.std_error, mc.std_error);
  CHECK(std::abs(exact.mean - mc.mean) < 3 * combined);
  // Same disorder, so the per-sample difference is pure Monte Carlo error.
  for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(exact.per_sample[i] - mc.per_sample[i]) < 5e-3);

  const ModelParams g({0.9, 1.1}, {0.3, 0.4, 0.3}, gaussian_fields(3, 0.5));
  const LayerAssignment b{{6, 7, 6}};
  const auto ge = dbm::exact_pressure(b, g, 8, 10);
  const auto gm = dbm::mc_pressure(b, g, 8, 10, {2000, 21, {}});
  CHECK(std::abs(ge.mean - gm.mean) < 3 * std::hypot(ge.std_error, gm.std_error));
  CHECK(gm.method == dbm::EstimateMethod::monte_carlo);
}

TEST_CASE("Monte Carlo at zero coupling") {
  const ModelParams p({0.0}, {0.5, 0.5}, gaussian_fields(2, 1.0));
  const LayerAssignment a{{30, 30}};
  const auto mc = dbm::mc_pressure(a, p, 6, 2, {100, 5, {}});
  const auto ex = dbm::exact_pressure({{12, 12}}, p, 1, 2);
  (void)ex;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto d = DisorderSample::draw(a, p, 2, static_cast<std::uint32_t>(i));
    double s = 0.0;
    for (double h : d.fields) s += std::log(2 * std::cosh(h));
    CHECK(std::abs(mc.per_sample[i] - s / 60) < 1e-14);
  }
  CHECK(mc.non_equilibrated == 0);
}

TEST_CASE("Monte Carlo deep in the annealed region") {
  const ModelParams p({0.3}, {0.5, 0.5});
  const LayerAssignment a{{300, 300}};
  const auto mc = dbm::mc_pressure(a, p, 3, 11, {200, 21, {}});
  CHECK(std::abs(mc.mean - dbm::annealed_pressure(p)) < 3 * mc.std_error + 0.01);
}

TEST_CASE("covariance of the Hamiltonian") {
  const ModelParams p({1.1}, {0.5, 0.5});
  const LayerAssignment a{{2, 2}};
  const dbm::Spins s{1, -1, 1, 1};
  const int n = 5000;
  const auto same = dbm::hamiltonian_covariance(s, s, a, p, n, 3);
  const double expected = 2.0 * 4 * 0.5 * 1.21 * 0.5;
  CHECK(same.expected == doctest::Approx(expected).epsilon(1e-15));
  CHECK(std::abs(same.empirical - expected) / expected < 4.0 / std::sqrt(n));

  const dbm::Spins t{1, 1, -1, 1};
  const dbm::Spins u{1, -1, -1, -1};
  const auto orth = dbm::hamiltonian_covariance(t, u, a, p, n, 3);
  CHECK(orth.overlaps == std::vector<double>{0.0, 0.0});
  CHECK(orth.expected == 0.0);
  CHECK(std::abs(orth.empirical) < 5 * orth.std_error);

  const ModelParams q({0.8, 1.3}, {0.3, 0.3, 0.4});
  const auto report = dbm::covariance_check(LayerAssignment::from_lambda(q.lambda(), 16), q, n, 12);
  CHECK(report.pairs.size() == 10);
  CHECK(report.max_standard_errors < 5.0);
}

TEST_CASE("annealed trend") {
  const ModelParams p({0.5, 0.5}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const std::vector<LayerAssignment> sizes{{{4, 4, 4}}, {{6, 6, 6}}, {{8, 8, 8}}};
  const auto r = dbm::annealed_trend(p, sizes, 200, 1);
  CHECK(r.jensen_ok);
  CHECK(r.gap_decreasing);
  for (const auto& row : r.rows) {
    CHECK(row.p_annealed == doctest::Approx(std::numbers::ln2 + 1.0 / 18).epsilon(1e-15));
    CHECK(row.gap > 0.0);
  }

  const ModelParams k2({0.8}, {0.5, 0.5});
  const std::vector<LayerAssignment> s2{{{4, 4}}, {{8, 8}}, {{12, 12}}};
  const auto r2 = dbm::annealed_trend(k2, s2, 1000, 2);
  CHECK(r2.jensen_ok);
  CHECK(r2.gap_decreasing);
  for (const auto& row : r2.rows) CHECK(row.gap > 0.0);

  const ModelParams flat({0.0, 0.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto r3 = dbm::annealed_trend(flat, sizes, 10, 3);
  for (const auto& row : r3.rows) CHECK(std::abs(row.gap) < 1e-15);

  CHECK_THROWS_AS(dbm::annealed_trend(ModelParams({1.5}, {0.5, 0.5}), s2, 10, 1), dbm::PreconditionError);
  const std::vector<LayerAssignment> shrinking{{{8, 8}}, {{4, 4}}};
  CHECK_THROWS_AS(dbm::annealed_trend(k2, shrinking, 10, 1), dbm::DomainError);
}

TEST_CASE("pairwise sum and parallel_for") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / static_cast<double>(i + 1);
  double naive = 0.0;
  for (double x : v) naive += x;
  CHECK(std::abs(dbm::pairwise_sum(v) - naive) < 1e-12);
  CHECK(dbm::pairwise_sum(std::vector<double>{}) == 0.0);

  std::vector<int> hits(257, 0);
  dbm::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(dbm::parallel_for(
                      10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3),
                  std::runtime_error);
}
