#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcboost/hypothesis.hpp"

using namespace mcboost;
using namespace mcboost::hypothesis;

namespace {

FactorizedClass seeded_class_2x2() {
  std::vector<FeatureMap> h = {FeatureMap::constant(1.0), FeatureMap::coordinate(0)};
  std::vector<LinkMap> g = {LinkMap::constant(1.0), LinkMap::linear(0.7, 0.1)};
  return FactorizedClass(std::move(h), std::move(g));
}

Matrix random_x(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = uniform_in(rng, -2.0, 2.0);
  return x;
}

Vector random_f(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  Vector f(n);
  for (double& v : f) v = scale * normal01(rng);
  return f;
}

}  // namespace

TEST_CASE("constant class evaluates to the all-ones column") {
  FactorizedClass cls({FeatureMap::constant(1.0)}, {LinkMap::constant(1.0)});
  const Matrix b = eval_B(cls, Matrix(3, 1, 0.0), {5.0, -1.0, 2.0});
  REQUIRE(b.rows() == 3);
  REQUIRE(b.cols() == 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(b(i, 0) == 1.0);
}

TEST_CASE("intercept-slope rows follow the column convention") {
  // h = (x), g = (1, u): row i = (x_i, x_i * f_i)
  FactorizedClass cls({FeatureMap::coordinate(0)},
                      {LinkMap::constant(1.0), LinkMap::linear(1.0, 0.0)});
  const Matrix x(2, 1, std::vector<double>{2.0, 5.0});
  const Matrix b = eval_B(cls, x, {1.0, 3.0});
  CHECK(b(0, 0) == 2.0);
  CHECK(b(0, 1) == 2.0);
  CHECK(b(1, 0) == 5.0);
  CHECK(b(1, 1) == 15.0);
}

TEST_CASE("eval_B equals the brute-force double loop") {
  std::mt19937_64 rng(99);
  const FactorizedClass cls = seeded_class_2x2();
  const Matrix x = random_x(rng, 7, 1);
  const Vector f = random_f(rng, 7);
  const Matrix b = eval_B(cls, x, f);
  REQUIRE(b.cols() == cls.width());
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t a = 0; a < cls.m(); ++a) {
      for (std::size_t c = 0; c < cls.k(); ++c) {
        const double expected = cls.h_maps[a].eval(x.row(i)) * cls.g_maps[c].eval(f[i]);
        CHECK(b(i, a * cls.k() + c) == doctest::Approx(expected).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("eval_B matches the block-diagonal factor formula") {
  // B(f) = D_g(f) (H(X) kron I_k) with D_g the row-block diagonal of g(f_i)
  std::mt19937_64 rng(3);
  const FactorizedClass cls = seeded_class_2x2();
  const std::size_t n = 5, m = cls.m(), k = cls.k();
  const Matrix x = random_x(rng, n, 1);
  const Vector f = random_f(rng, n);

  Matrix h(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < m; ++a) h(i, a) = cls.h_maps[a].eval(x.row(i));
  Matrix dg(n, n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) dg(i, i * k + c) = cls.g_maps[c].eval(f[i]);
  Matrix h_kron(n * k, m * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t c = 0; c < k; ++c) h_kron(i * k + c, a * k + c) = h(i, a);

  const Matrix block = matmul(dg, h_kron);
  const Matrix direct = eval_B(cls, x, f);
  CHECK(max_abs_diff(block, direct) <= 1e-12);
}

TEST_CASE("eval_B names the offending map and row on non-finite output") {
  FactorizedClass cls(
      {FeatureMap::constant(1.0)},
      {LinkMap::custom("reciprocal", [](double u) { return 1.0 / u; }, 1.0)});
  try {
    eval_B(cls, Matrix(2, 1, 0.0), {1.0, 0.0});
    FAIL("expected ContractViolation");
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    CHECK(msg.find("reciprocal") != std::string::npos);
    CHECK(msg.find("row 1") != std::string::npos);
  }
}

TEST_CASE("bound_LB examples") {
  SUBCASE("constant links are 0-Lipschitz") {
    FactorizedClass cls({FeatureMap::constant(1.0)}, {LinkMap::constant(2.0)});
    CHECK(bound_LB(cls, Matrix(4, 1, 0.5)) == 0.0);
  }
  SUBCASE("single coordinate feature with unit-slope link") {
    FactorizedClass cls({FeatureMap::coordinate(0)}, {LinkMap::linear(1.0, 0.0)});
    const Matrix x(3, 1, std::vector<double>{-5.0, 2.0, 1.0});
    CHECK(bound_LB(cls, x) == doctest::Approx(5.0));
  }
  SUBCASE("k = 4 links with slope 1/2 and feature norm 2") {
    FactorizedClass cls({FeatureMap::constant(2.0)},
                        {LinkMap::clamped_linear(0.5, 0.0, -10.0, 10.0),
                         LinkMap::clamped_linear(0.5, 1.0, -10.0, 10.0),
                         LinkMap::clamped_linear(-0.5, 0.0, -10.0, 10.0),
                         LinkMap::constant(1.0)});
    CHECK(bound_LB(cls, Matrix(2, 1, 0.0)) == doctest::Approx(2.0 * 2.0 * 0.5));
  }
}

TEST_CASE("bound_LB refuses non-Lipschitz step links") {
  FactorizedClass cls({FeatureMap::constant(1.0)}, {LinkMap::step_indicator(0.0)});
  CHECK_THROWS_AS(bound_LB(cls, Matrix(2, 1, 0.0)), ContractViolation);
}

TEST_CASE("bound_LA closed form") {
  const double c = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(bound_LA(1.0, 1.0, 1.0) == doctest::Approx(2.0 * (1.0 + c)).epsilon(1e-12));
  CHECK(bound_LA(1.0, 1.0, 1.0) == doctest::Approx(5.2360680).epsilon(1e-7));
  CHECK(bound_LA(0.0, 0.5, 1.0) == 0.0);
  CHECK(bound_LA(1.0, 2.0, 4.0) == doctest::Approx(7.4721360).epsilon(1e-7));
  CHECK_THROWS_AS(bound_LA(1.0, 0.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(bound_LA(1.0, -1.0, 1.0), ContractViolation);
}

TEST_CASE("measured_lipschitz_A is zero for prediction-independent classes") {
  std::mt19937_64 rng(5);
  FactorizedClass cls({FeatureMap::constant(1.0), FeatureMap::coordinate(0)},
                      {LinkMap::constant(1.0)});
  const Matrix x = random_x(rng, 6, 1);
  const Vector u = random_f(rng, 6);
  Vector v = random_f(rng, 6);
  CHECK(measured_lipschitz_A(cls, x, u, v) <= 1e-12);
  CHECK_THROWS_AS(measured_lipschitz_A(cls, x, u, u), ContractViolation);
}

TEST_CASE("measured Lipschitz ratio stays under the closed-form bound") {
  // Monte-Carlo: on pairs where both evaluation matrices keep their smallest
  // singular value above delta, the projector ratio obeys the bound with the
  // pair's own delta and M.
  std::mt19937_64 rng(2024);
  FactorizedClass cls({FeatureMap::constant(1.0), FeatureMap::coordinate(0)},
                      {LinkMap::constant(1.0), LinkMap::clamped_linear(0.5, 0.0, -4.0, 4.0)});
  const std::size_t n = 12;
  const Matrix x = random_x(rng, n, 1);
  const double l_b = bound_LB(cls, x);
  int qualified = 0;
  for (int rep = 0; rep < 200 && qualified < 100; ++rep) {
    const Vector u = random_f(rng, n);
    Vector v = u;
    for (double& w : v) w += 0.3 * normal01(rng);
    const SvdResult du = svd(eval_B(cls, x, u));
    const SvdResult dv = svd(eval_B(cls, x, v));
    const double delta =
        std::min(du.singular_values.back(), dv.singular_values.back());
    if (delta <= 0.05) continue;  // outside the smoothness precondition
    const double m_bound = std::max(du.singular_values.front(), dv.singular_values.front());
    ++qualified;
    const double measured = measured_lipschitz_A(cls, x, u, v);
    const double bound = bound_LA(l_b, delta, m_bound);
    CHECK(measured <= bound * (1.0 + 1e-9));
  }
  CHECK(qualified >= 100);
}

TEST_CASE("rank instability at zero predictions violates the smoothness preconditions") {
  // with g = (1, u) the second column vanishes at u = 0, so B(0) drops rank:
  // the closed-form bound's delta > 0 precondition fails there and the
  // measured ratio genuinely blows up like 1/eps across the rank change
  FactorizedClass cls({FeatureMap::constant(1.0)},
                      {LinkMap::constant(1.0), LinkMap::linear(1.0, 0.0)});
  const Matrix x(3, 1, 0.0);
  const Vector u = {0.0, 0.0, 0.0};
  const double eps = 1e-6;
  const Vector v = {eps, 0.0, 0.0};
  const SvdResult du = svd(eval_B(cls, x, u));
  CHECK(du.numeric_rank == 1);
  CHECK(du.singular_values.back() <= 1e-14);           // delta = 0 here
  CHECK_THROWS_AS(bound_LA(1.0, 0.0, 1.0), ContractViolation);
  const double ratio = measured_lipschitz_A(cls, x, u, v);
  CHECK(ratio >= 0.5 / eps);  // projector jump of norm 1 over distance eps
}

TEST_CASE("evaluation matrices are Lipschitz in the predictions") {
  std::mt19937_64 rng(77);
  FactorizedClass cls({FeatureMap::constant(1.0), FeatureMap::coordinate(0)},
                      {LinkMap::constant(1.0), LinkMap::clamped_linear(0.8, 0.0, -3.0, 3.0)});
  const std::size_t n = 9;
  const Matrix x = random_x(rng, n, 1);
  const double l_b = bound_LB(cls, x);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector u = random_f(rng, n);
    Vector v = random_f(rng, n);
    Matrix diff = eval_B(cls, x, u);
    const Matrix bv = eval_B(cls, x, v);
    for (std::size_t i = 0; i < diff.rows(); ++i)
      for (std::size_t j = 0; j < diff.cols(); ++j) diff(i, j) -= bv(i, j);
    CHECK(spectral_norm(diff) <= l_b * norm2(subtract(u, v)) * (1.0 + 1e-9));
  }
}

TEST_CASE("class config round-trips") {
  std::vector<FeatureMap> h = {FeatureMap::constant(1.0), FeatureMap::coordinate(2),
                               FeatureMap::threshold_indicator(1, 0.25)};
  std::vector<LinkMap> g = {LinkMap::constant(1.0), LinkMap::linear(2.0, -1.0),
                            LinkMap::clamped_linear(0.5, 0.0, -1.0, 1.0),
                            LinkMap::step_indicator(0.75)};
  const FactorizedClass cls(std::move(h), std::move(g));
  const FactorizedClass back = class_from_config(to_config(cls));
  REQUIRE(back.m() == cls.m());
  REQUIRE(back.k() == cls.k());
  // behavioral equality on a probe grid
  Matrix x(1, 3);
  for (double xv : {-1.0, 0.0, 0.3, 2.0}) {
    x(0, 0) = xv;
    x(0, 1) = xv / 2.0;
    x(0, 2) = -xv;
    for (double fv : {-2.0, 0.0, 0.5, 1.0}) {
      const Matrix b0 = eval_B(cls, x, {fv});
      const Matrix b1 = eval_B(back, x, {fv});
      CHECK(max_abs_diff(b0, b1) == 0.0);
    }
  }
}

TEST_CASE("class config rejects malformed lines") {
  CHECK_THROWS_AS(class_from_config("h constant 1\n"), ContractViolation);  // no g
  CHECK_THROWS_AS(class_from_config("q constant 1\ng constant 1\n"), ContractViolation);
  CHECK_THROWS_AS(class_from_config("h coord\ng constant 1\n"), ContractViolation);
}

TEST_CASE("link maps satisfy their declared Lipschitz constants on a grid") {
  const LinkMap links[] = {LinkMap::linear(1.5, 0.2),
                           LinkMap::clamped_linear(0.7, -0.1, -1.0, 1.0),
                           LinkMap::constant(3.0)};
  for (const LinkMap& g : links) {
    for (int i = -20; i <= 20; ++i) {
      for (int j = i + 1; j <= 20; ++j) {
        const double u = 0.25 * i, v = 0.25 * j;
        CHECK(std::abs(g.eval(u) - g.eval(v)) <= g.lipschitz * std::abs(u - v) + 1e-12);
      }
    }
  }
}
