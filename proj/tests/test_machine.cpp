#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dbm/errors.hpp"
#include "dbm/machine.hpp"
#include "support.hpp"

using dbm::ModelParams;
using dbm::RegionState;

namespace {

ModelParams random_params(testing::Rand& rng, int K, double beta_hi) {
  return ModelParams(rng.uniforms(static_cast<std::size_t>(K - 1), 0.05, beta_hi),
                     rng.simplex(static_cast<std::size_t>(K)));
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(ModelParams({}, {1.0}));
  CHECK_THROWS_AS(ModelParams({1.0}, {0.5, 0.6}), dbm::DomainError);
  CHECK_THROWS_AS(ModelParams({1.0, 1.0}, {0.5, 0.5}), dbm::DomainError);
  CHECK_THROWS_AS(ModelParams({-1.0}, {0.5, 0.5}), dbm::DomainError);
  CHECK_THROWS_AS(ModelParams({1.0}, {1.5, -0.5}), dbm::DomainError);
  CHECK_THROWS_AS(ModelParams({1.0}, {0.5, 0.5}, {dbm::FieldSpec::zero()}), dbm::DomainError);
  CHECK_THROWS_AS(dbm::FieldSpec::gaussian(-1.0), dbm::DomainError);
  CHECK_THROWS_AS(dbm::FieldSpec::discrete({{1.0, 0.5}, {2.0, 0.4}}), dbm::DomainError);
  CHECK_NOTHROW(dbm::FieldSpec::discrete({{1.0, 0.5}, {-1.0, 0.5}}));
}

TEST_CASE("activities") {
  CHECK(dbm::activities(ModelParams({1.0}, {0.5, 0.5}))[0] == 1.0);
  CHECK(dbm::activities(ModelParams({1.3}, {0.5, 0.5}))[0] == doctest::Approx(std::pow(1.3, 4)));
  const auto t = dbm::activities(ModelParams({1.0, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  CHECK(t[0] == doctest::Approx(4.0 / 9).epsilon(1e-15));
  CHECK(t[1] == doctest::Approx(4.0 / 9).epsilon(1e-15));
}

TEST_CASE("annealed pressure") {
  CHECK(dbm::annealed_pressure(ModelParams({}, {1.0})) == std::numbers::ln2);
  CHECK(dbm::annealed_pressure(ModelParams({1.0}, {0.5, 0.5})) == doctest::Approx(std::numbers::ln2 + 0.25).epsilon(1e-15));
  CHECK(dbm::annealed_pressure(ModelParams({0.5, 0.5}, {1.0 / 3, 1.0 / 3, 1.0 / 3})) ==
        doctest::Approx(std::numbers::ln2 + 1.0 / 18).epsilon(1e-15));
}

TEST_CASE("spectral radius") {
  CHECK(dbm::spectral_radius(ModelParams({}, {1.0})) == 0.0);
  CHECK(dbm::spectral_radius(ModelParams({1.0}, {0.5, 0.5})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(dbm::spectral_radius(ModelParams({1.0, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3})) ==
        doctest::Approx(std::sqrt(8.0) / 3).epsilon(1e-14));
  testing::Rand rng(1);
  for (int i = 0; i < 20; ++i) {
    const double b = rng.uniform(0.1, 2.0);
    const double l1 = rng.uniform(0.0, 1.0);
    const ModelParams p({b}, {l1, 1.0 - l1});
    CHECK(dbm::spectral_radius(p) == doctest::Approx(2 * b * b * std::sqrt(l1 * (1 - l1))).epsilon(1e-13));
  }
}

TEST_CASE("interaction matrices") {
  const auto m = dbm::build_matrices(ModelParams({1.0}, {0.5, 0.5}));
  CHECK(m.M(0, 0) == 0.0);
  CHECK(m.M(0, 1) == 1.0);
  CHECK(m.M(1, 0) == 1.0);
  CHECK(m.M(1, 1) == 0.0);

  const auto one = dbm::build_matrices(ModelParams({}, {1.0}));
  CHECK(one.M.rows() == 1);
  CHECK(one.M(0, 0) == 0.0);
  CHECK(one.M0(0, 0) == 0.0);
  CHECK(one.M1(0, 0) == 0.0);

  testing::Rand rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = rng.integer(2, 8);
    const ModelParams p = random_params(rng, K, 1.5);
    const auto mats = dbm::build_matrices(p);
    CHECK((mats.M0 - mats.M0.transpose()).norm() == 0.0);
    CHECK(mats.M.minCoeff() >= 0.0);
    CHECK(mats.M1.minCoeff() >= 0.0);
    // Quadratic-form helpers agree with the dense matrices.
    const std::vector<double> x = rng.uniforms(static_cast<std::size_t>(K), 0.0, 1.0);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), K);
    CHECK(dbm::half_coupling_form(p, x) == doctest::Approx(0.5 * xv.dot(mats.M1 * xv)).epsilon(1e-13));
    const Eigen::VectorXd mx = mats.M * xv;
    const auto applied = dbm::apply_m(p, x);
    for (int i = 0; i < K; ++i) CHECK(applied[static_cast<std::size_t>(i)] == doctest::Approx(mx(i)).epsilon(1e-13));
  }
}

TEST_CASE("characteristic polynomial of M is the chain polynomial") {
  testing::Rand rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = rng.integer(1, 8);
    const ModelParams p = random_params(rng, K, 1.6);
    const auto M = dbm::build_matrices(p).M;
    const auto t = dbm::activities(p);
    for (int k = 0; k < 20; ++k) {
      const double x = rng.uniform(-3.0, 3.0);
      const double det = (x * Eigen::MatrixXd::Identity(K, K) - M).determinant();
      const double chain = dbm::eval_sequence(x, t, K).values.back();
      CHECK(std::abs(det - chain) <= 1e-9 * std::max(1.0, std::abs(chain)));
    }
  }
}

TEST_CASE("classify_annealed on hand-checked points") {
  SUBCASE("K = 2 inside") {
    const auto v = dbm::classify_annealed(ModelParams({0.9}, {0.5, 0.5}));
    CHECK(v.in_region == RegionState::inside);
    CHECK(v.rho == doctest::Approx(0.81).epsilon(1e-14));
    REQUIRE(v.a_star);
    CHECK((*v.a_star)[0] == doctest::Approx(1.0 / (2 * 0.5 * 0.81)).epsilon(1e-14));
    CHECK((*v.a_star)[0] == doctest::Approx(1.2346).epsilon(1e-4));
    REQUIRE(v.feasible_a);
    for (double r : dbm::annealed_system_rows(ModelParams({0.9}, {0.5, 0.5}), *v.feasible_a)) CHECK(r < 0.5);
  }
  SUBCASE("K = 2 outside") {
    const auto v = dbm::classify_annealed(ModelParams({1.1}, {0.5, 0.5}));
    CHECK(v.in_region == RegionState::outside);
    CHECK(v.rho == doctest::Approx(1.21).epsilon(1e-14));
    CHECK_FALSE(v.feasible_a);
  }
  SUBCASE("K = 3 inside with explicit chain") {
    const auto v = dbm::classify_annealed(ModelParams({1.0, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
    CHECK(v.in_region == RegionState::inside);
    CHECK(v.chain_values[2] == doctest::Approx(5.0 / 9).epsilon(1e-14));
    CHECK(v.chain_values[3] == doctest::Approx(1.0 / 9).epsilon(1e-13));
  }
  SUBCASE("K = 1") {
    const auto v = dbm::classify_annealed(ModelParams({}, {1.0}));
    CHECK(v.in_region == RegionState::inside);
    CHECK(v.rho == 0.0);
  }
  SUBCASE("balanced K = 2 at beta = 1 is on the boundary") {
    CHECK(dbm::classify_annealed(ModelParams({1.0}, {0.5, 0.5})).in_region == RegionState::boundary);
  }
  SUBCASE("vanishing lambda skips the recursion") {
    const auto v = dbm::classify_annealed(ModelParams({1.3, 0.7}, {0.0, 0.6, 0.4}));
    CHECK_FALSE(v.criteria.recursion);
    CHECK(v.in_region == RegionState::inside);
    REQUIRE(v.feasible_a);
    for (double r : dbm::annealed_system_rows(ModelParams({1.3, 0.7}, {0.0, 0.6, 0.4}), *v.feasible_a)) {
      CHECK(r < 0.5);
    }
  }
}

TEST_CASE("the three membership criteria agree away from the boundary") {
  testing::Rand rng(4);
  int decided = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = rng.integer(2, 10);
    std::vector<double> lambda = rng.simplex(static_cast<std::size_t>(K));
    if (trial % 10 == 0) {
      lambda[static_cast<std::size_t>(rng.integer(0, K - 1))] = 0.0;
      double s = 0.0;
      for (double l : lambda) s += l;
      for (double& l : lambda) l /= s;
    }
    const ModelParams p(rng.uniforms(static_cast<std::size_t>(K - 1), 0.1, 2.2), lambda);
    const auto v = dbm::classify_annealed(p);
    double min_z = INFINITY;
    for (std::size_t i = 1; i < v.chain_values.size(); ++i) min_z = std::min(min_z, std::abs(v.chain_values[i]));
    if (min_z <= 1e-9 || std::abs(v.rho - 1.0) <= 1e-9) continue;
    ++decided;
    CHECK(v.in_region != RegionState::boundary);
    CHECK(v.criteria.chain == v.criteria.spectral);
    if (v.criteria.recursion) CHECK(*v.criteria.recursion == v.criteria.spectral);
    CHECK((v.rho < 1.0) == (v.in_region == RegionState::inside));
    if (v.in_region == RegionState::inside) {
      REQUIRE(v.feasible_a);
      for (double a : *v.feasible_a) CHECK(a > 0.0);
      for (double r : dbm::annealed_system_rows(p, *v.feasible_a)) CHECK(r < 0.5);
    }
  }
  CHECK(decided > 900);
}

TEST_CASE("a* closes the annealed system") {
  testing::Rand rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = rng.integer(2, 8);
    const ModelParams p = random_params(rng, K, 0.9);
    const auto v = dbm::classify_annealed(p);
    if (v.in_region != RegionState::inside) continue;
    REQUIRE(v.a_star);
    const auto rows = dbm::annealed_system_rows(p, *v.a_star);
    for (int i = 0; i + 1 < K; ++i) CHECK(rows[static_cast<std::size_t>(i)] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(rows.back() < 0.5);
  }
}

TEST_CASE("spectral radius is monotone in beta and bounded by max beta^2") {
  testing::Rand rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const int K = rng.integer(2, 9);
    const ModelParams p = random_params(rng, K, 1.8);
    std::vector<double> bigger = p.beta();
    for (double& b : bigger) b += rng.uniform(0.0, 0.5);
    const double r = dbm::spectral_radius(p);
    CHECK(dbm::spectral_radius(p.with_beta(bigger)) >= r - 1e-14);
    const double bmax = *std::max_element(p.beta().begin(), p.beta().end());
    CHECK(r <= bmax * bmax + 1e-12);
  }
}

TEST_CASE("extremal lambda") {
  SUBCASE("single peak") {
    const std::vector<double> beta{1.0, 2.0, 1.0};
    const auto e = dbm::extremal_lambda(beta);
    CHECK(e.rho_sup == 4.0);
    REQUIRE(e.families.size() == 1);
    CHECK(e.families[0].member() == std::vector<double>{0.0, 0.5, 0.5, 0.0});
    const ModelParams p(beta, e.families[0].member());
    CHECK(dbm::spectral_radius(p) == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("plateau gives pairs and a triple family") {
    const std::vector<double> beta{1.0, 1.0};
    const auto e = dbm::extremal_lambda(beta);
    CHECK(e.rho_sup == 1.0);
    REQUIRE(e.families.size() == 3);
    CHECK(e.families[0].member() == std::vector<double>{0.5, 0.5, 0.0});
    CHECK(e.families[1].member() == std::vector<double>{0.0, 0.5, 0.5});
    CHECK(e.families[2].shape == dbm::MaximizerFamily::Shape::triple);
    for (double x : {0.0, 0.1, 0.25, 0.4, 0.5}) {
      const ModelParams p(beta, e.families[2].member(x));
      CHECK(std::abs(dbm::spectral_radius(p) - 1.0) <= 1e-12);
    }
  }
  SUBCASE("K = 2") {
    const double b = 1.4;
    const auto e = dbm::extremal_lambda(std::vector<double>{b});
    CHECK(e.rho_sup == doctest::Approx(b * b));
    REQUIRE(e.families.size() == 1);
    CHECK(e.families[0].member() == std::vector<double>{0.5, 0.5});
    // Any other split is strictly worse.
    for (double l : {0.3, 0.45, 0.49, 0.51, 0.7}) {
      CHECK(dbm::spectral_radius(ModelParams({b}, {l, 1 - l})) < b * b);
    }
  }
  SUBCASE("stochastic search approaches but never exceeds the supremum") {
    testing::Rand rng(7);
    for (int trial = 0; trial < 5; ++trial) {
      const int K = rng.integer(2, 7);
      const auto beta = rng.uniforms(static_cast<std::size_t>(K - 1), 0.2, 1.8);
      const auto e = dbm::extremal_lambda(beta);
      const auto found = dbm::search_rho_sup(beta, 1000, 99 + static_cast<unsigned>(trial));
      CHECK(found.best_rho <= e.rho_sup + 1e-9);
      CHECK(found.best_rho >= e.rho_sup - 1e-6);
    }
  }
}

TEST_CASE("chain quadratic inequality") {
  auto r = dbm::chain_quadratic_bound(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5});
  CHECK(r.lhs == 1.0);
  CHECK(r.rhs == 1.0);
  CHECK(r.equality);

  r = dbm::chain_quadratic_bound(std::vector<double>{1.0, 1.0}, std::vector<double>{0.25, 0.5, 0.25});
  CHECK(r.lhs == 1.0);
  CHECK(r.rhs == 1.0);
  CHECK(r.equality);

  r = dbm::chain_quadratic_bound(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(r.lhs == doctest::Approx(8.0 / 9));
  CHECK(r.rhs == doctest::Approx(1.0));
  CHECK_FALSE(r.equality);

  CHECK_THROWS_AS(dbm::chain_quadratic_bound(std::vector<double>{}, std::vector<double>{1.0}), dbm::DomainError);

  testing::Rand rng(8);
  for (int trial = 0; trial < 10000; ++trial) {
    const int P = rng.integer(2, 8);
    const auto b = rng.uniforms(static_cast<std::size_t>(P - 1), 0.0, 2.0);
    auto x = rng.uniforms(static_cast<std::size_t>(P), 0.0, 1.0);
    if (trial % 3 == 0) {
      // Plant an equality configuration.
      const int p = rng.integer(0, P - 2);
      std::fill(x.begin(), x.end(), 0.0);
      x[static_cast<std::size_t>(p)] = x[static_cast<std::size_t>(p) + 1] = 0.5;
      auto bb = b;
      bb[static_cast<std::size_t>(p)] = *std::max_element(b.begin(), b.end());
      const auto res = dbm::chain_quadratic_bound(bb, x);
      CHECK(res.equality);
      CHECK(std::abs(res.lhs - res.rhs) <= 1e-12);
      continue;
    }
    const auto res = dbm::chain_quadratic_bound(b, x);
    CHECK(res.lhs <= res.rhs * (1 + 1e-15));
    CHECK(res.equality == (std::abs(res.lhs - res.rhs) <= 1e-12));
  }
}
