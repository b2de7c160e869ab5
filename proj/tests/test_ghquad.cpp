#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dbm/ghquad.hpp"
#include "support.hpp"

using dbm::FieldSpec;
using dbm::QuadratureRule;
namespace k = dbm::kernels;

namespace {

// Trapezoid rule for E f(z sqrt(S) + h) on [-12, 12] with n intervals.
template <class F>
double trapezoid(const F& f, double S, double h, int n) {
  const double L = 12.0;
  const double dz = 2 * L / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = -L + i * dz;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * f(z * std::sqrt(S) + h) * std::exp(-0.5 * z * z);
  }
  return sum * dz / std::sqrt(2 * std::numbers::pi);
}

}  // namespace

TEST_CASE("rules are normalised and symmetric") {
  for (const QuadratureRule& rule :
       {QuadratureRule::composite(8), QuadratureRule::composite(5), QuadratureRule::gauss_hermite(61),
        QuadratureRule::gauss_hermite(20)}) {
    double total = 0.0;
    for (double w : rule.weights()) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) < 1e-13);
    const auto& z = rule.nodes();
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == -z[z.size() - 1 - i]);
    double half_total = 0.0;
    for (double w : rule.half_weights()) half_total += w;
    CHECK(std::abs(half_total - 1.0) < 1e-13);
  }
  CHECK(QuadratureRule::gauss_hermite(61).order() == 61);
  CHECK_THROWS_AS(QuadratureRule::composite(1), dbm::DomainError);
}

TEST_CASE("Gaussian moments") {
  for (const QuadratureRule& rule : {QuadratureRule::standard(), QuadratureRule::gauss_hermite(30)}) {
    CHECK(dbm::expect([](double y) { return y * y; }, 1.0, FieldSpec::zero(), rule) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(dbm::expect([](double y) { return std::pow(y, 4); }, 1.0, FieldSpec::zero(), rule) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(dbm::expect([](double y) { return std::pow(y, 6); }, 1.0, FieldSpec::zero(), rule) == doctest::Approx(15.0).epsilon(1e-12));
  }
}

TEST_CASE("trivial expectations") {
  CHECK(dbm::expect(k::LogCosh{}, 0.0, FieldSpec::zero()) == 0.0);
  const double h0 = 0.83;
  CHECK(dbm::expect(k::Tanh2{}, 0.0, FieldSpec::point_mass(h0)) ==
        doctest::Approx(std::tanh(h0) * std::tanh(h0)).epsilon(1e-14));
  CHECK_THROWS_AS(dbm::expect(k::Tanh2{}, -0.1, FieldSpec::zero()), dbm::DomainError);
  for (double s : {0.0, 0.3, 2.0, 17.0}) {
    CHECK(dbm::expect(k::Square{}, s, FieldSpec::zero()) == doctest::Approx(s).epsilon(1e-13));
  }
}

TEST_CASE("E tanh^2(z) against Monte Carlo and trapezoid oracles") {
  const double q = dbm::expect(k::Tanh2{}, 1.0, FieldSpec::zero());

  testing::Rand rng(21);
  const int n = 10'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = std::tanh(rng.normal());
    const double v = t * t;
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
  CHECK(std::abs(q - mean) < 3 * se);

  const double trap = trapezoid(k::Tanh2{}, 1.0, 0.0, 1'000'000);
  CHECK(std::abs(q - trap) < 1e-6);
  // The trapezoid rule is spectrally accurate here, so the agreement is in
  // fact much tighter.
  CHECK(std::abs(q - trap) < 1e-12);
}

TEST_CASE("default rule is accurate for large variances") {
  for (double S : {0.5, 4.0, 25.0, 100.0}) {
    CHECK(std::abs(dbm::expect(k::Tanh2{}, S, FieldSpec::zero()) - trapezoid(k::Tanh2{}, S, 0.0, 400'000)) < 1e-12);
    CHECK(std::abs(dbm::expect(k::LogCosh{}, S, FieldSpec::zero()) - trapezoid(k::LogCosh{}, S, 0.0, 400'000)) < 1e-11);
    CHECK(std::abs(dbm::expect(k::Sech4{}, S, FieldSpec::zero()) - trapezoid(k::Sech4{}, S, 0.0, 400'000)) < 1e-12);
  }
  const auto h = FieldSpec::point_mass(0.7);
  CHECK(std::abs(dbm::expect(k::Tanh2{}, 3.0, h) - trapezoid(k::Tanh2{}, 3.0, 0.7, 400'000)) < 1e-12);
}

TEST_CASE("derivative in s") {
  const double eps = 1e-5;
  for (const FieldSpec& field : {FieldSpec::zero(), FieldSpec::gaussian(0.4), FieldSpec::point_mass(-0.6),
                                 FieldSpec::discrete({{0.5, 0.25}, {-1.5, 0.75}})}) {
    for (double s : {0.2, 1.0, 3.0}) {
      const double fd = (dbm::expect(k::Tanh2{}, s + eps, field) - dbm::expect(k::Tanh2{}, s - eps, field)) / (2 * eps);
      const double an = dbm::expect_derivative_in_s(k::Tanh2{}, s, field);
      CHECK(std::abs(an - fd) <= 1e-6 * std::abs(an));
      const double fd_lc = (dbm::expect(k::LogCosh{}, s + eps, field) - dbm::expect(k::LogCosh{}, s - eps, field)) / (2 * eps);
      CHECK(std::abs(dbm::expect_derivative_in_s(k::LogCosh{}, s, field) - fd_lc) <= 1e-6 * std::abs(fd_lc));
    }
  }
  for (double s : {0.1, 1.0, 9.0}) {
    CHECK(dbm::expect_derivative_in_s(k::Square{}, s, FieldSpec::zero()) == doctest::Approx(1.0).epsilon(1e-13));
  }
  CHECK(dbm::expect_derivative_in_s(k::Tanh2{}, 0.5, FieldSpec::gaussian(0.3)) ==
        doctest::Approx(dbm::expect_derivative_in_s(k::Tanh2{}, 0.8, FieldSpec::zero())).epsilon(1e-14));
  CHECK_THROWS_AS(dbm::expect_derivative_in_s(k::Tanh2{}, 0.0, FieldSpec::zero()), dbm::DomainError);
}

TEST_CASE("variance folding") {
  testing::Rand rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const double s = rng.uniform(0.0, 10.0);
    const double v = rng.uniform(0.0, 10.0);
    const auto g = FieldSpec::gaussian(v);
    CHECK(std::abs(dbm::expect(k::Tanh2{}, s, g) - dbm::expect(k::Tanh2{}, s + v, FieldSpec::zero())) < 1e-12);
    CHECK(std::abs(dbm::expect(k::LogCosh{}, s, g) - dbm::expect(k::LogCosh{}, s + v, FieldSpec::zero())) < 1e-12);
    CHECK(std::abs(dbm::expect(k::Sech4{}, s, g) - dbm::expect(k::Sech4{}, s + v, FieldSpec::zero())) < 1e-12);
  }
}

TEST_CASE("doubling the rule order leaves tanh^2 unchanged") {
  const auto fine = QuadratureRule::composite(16);
  for (double s = 0.25; s <= 25.0; s += 0.25) {
    const double a = dbm::expect(k::Tanh2{}, s, FieldSpec::zero());
    const double b = dbm::expect(k::Tanh2{}, s, FieldSpec::zero(), fine);
    CHECK(std::abs(a - b) < 1e-10);
  }
}

TEST_CASE("bounds and monotonicity") {
  testing::Rand rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const double s = rng.uniform(0.0, 30.0);
    FieldSpec field = FieldSpec::zero();
    switch (trial % 4) {
      case 1: field = FieldSpec::gaussian(rng.uniform(0.0, 3.0)); break;
      case 2: field = FieldSpec::point_mass(rng.uniform(-3.0, 3.0)); break;
      case 3: field = FieldSpec::discrete({{rng.uniform(-2, 2), 0.3}, {rng.uniform(-2, 2), 0.7}}); break;
      default: break;
    }
    const double t2 = dbm::expect(k::Tanh2{}, s, field);
    CHECK(t2 >= 0.0);
    CHECK(t2 <= 1.0);
    CHECK(dbm::expect(k::LogCosh{}, s, field) >= 0.0);
    const double s4 = dbm::expect(k::Sech4{}, s, field);
    CHECK(s4 > 0.0);
    CHECK(s4 <= 1.0);
  }
  double previous = -1.0;
  for (double s = 0.0; s <= 40.0; s += 0.05) {
    const double v = dbm::expect(k::Tanh2{}, s, FieldSpec::zero());
    CHECK(v > previous);
    previous = v;
  }
}

TEST_CASE("log cosh kernel is overflow safe and accurate") {
  for (double y : {0.0, 1e-8, 0.3, -2.0, 15.0, -40.0}) {
    CHECK(k::log_cosh(y) == doctest::Approx(std::log(std::cosh(y))).epsilon(1e-14));
  }
  CHECK(k::log_cosh(1e4) == doctest::Approx(1e4 - std::numbers::ln2).epsilon(1e-15));
  CHECK(std::isfinite(k::log_cosh(-1e300)));
  CHECK(k::Sech4{}(1e4) == 0.0);
}

TEST_CASE("discrete field sums over its atoms") {
  const auto field = FieldSpec::discrete({{1.0, 0.25}, {-0.5, 0.75}});
  const double s = 1.3;
  const double direct = 0.25 * dbm::expect(k::Tanh2{}, s, FieldSpec::point_mass(1.0)) +
                        0.75 * dbm::expect(k::Tanh2{}, s, FieldSpec::point_mass(-0.5));
  CHECK(dbm::expect(k::Tanh2{}, s, field) == doctest::Approx(direct).epsilon(1e-14));
}
