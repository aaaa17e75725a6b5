#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "privrec/errors.hpp"
#include "privrec/eval.hpp"
#include "privrec/random.hpp"

using namespace privrec;
using namespace privrec::eval;

namespace {
constexpr RatingRange kUnit{0.0, 1.0};
}

TEST_CASE("mae basics") {
  const std::vector<Scalar> p{2, 2, 2}, r{1, 2, 3};
  CHECK(mae(p, r) == doctest::Approx(2.0 / 3.0));
  CHECK(mae(r, r) == doctest::Approx(0.0));
  CHECK(mae(std::vector<Scalar>{5}, std::vector<Scalar>{3}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(mae(p, std::vector<Scalar>{1.0}), UsageError);
  CHECK_THROWS_AS(mae(std::vector<Scalar>{}, std::vector<Scalar>{}), UsageError);
}

TEST_CASE("mae is zero only for identical vectors") {
  Randomness rng(3);
  std::vector<Scalar> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(rng.uniform(-1, 1));
    b.push_back(a.back());
  }
  CHECK(mae(a, b) == doctest::Approx(0.0));
  b[7] += 0.25;
  CHECK(mae(a, b) > 0.0);
}

TEST_CASE("vi of a sequence with itself is zero") {
  const std::vector<Scalar> x{0.1, 0.4, 0.9, 0.2, 0.6};
  CHECK(vi(x, x, 4, kUnit) == doctest::Approx(0.0));
}

TEST_CASE("vi vanishes under a bijective relabeling") {
  // y mirrors x: states swap 0 <-> 1 but determine each other exactly.
  std::vector<Scalar> x, y;
  Randomness rng(4);
  for (int i = 0; i < 500; ++i) {
    const double v = rng.uniform(0.0, 1.0);
    x.push_back(v);
    y.push_back(1.0 - v);
  }
  CHECK(vi(x, y, 2, kUnit) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("vi of independent uniform binary sequences approaches 2 bits") {
  Randomness rng(5);
  std::vector<Scalar> x, y;
  for (int i = 0; i < 100000; ++i) {
    x.push_back(rng.uniform(0.0, 1.0));
    y.push_back(rng.uniform(0.0, 1.0));
  }
  CHECK(vi(x, y, 2, kUnit) == doctest::Approx(2.0).epsilon(0.05 / 2.0));
}

TEST_CASE("vi is symmetric and bounded by the entropy sum") {
  Randomness rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Scalar> x, y;
    for (int i = 0; i < 200; ++i) {
      x.push_back(rng.uniform(0.0, 1.0));
      y.push_back(0.3 * x.back() + 0.7 * rng.uniform(0.0, 1.0));
    }
    const double v = vi(x, y, 5, kUnit);
    CHECK(v == doctest::Approx(vi(y, x, 5, kUnit)).epsilon(1e-12));
    CHECK(v >= 0.0);
    CHECK(v <= discrete_entropy(x, 5, kUnit) + discrete_entropy(y, 5, kUnit) + 1e-12);
  }
}

TEST_CASE("clear CF oracle instantiates the weighted formula") {
  RatingMatrix train(3, 2, {-10, 10});
  train.set(0, 0, 4.0);
  train.set(0, 1, 6.0);
  train.set(1, 0, 2.0);
  train.set(2, 0, 6.0);

  const std::vector<std::pair<Index, Scalar>> target = {{1, 1.0}, {0, 3.0}};  // mean 2.0

  SUBCASE("single trusted participant") {
    // mean_0 over raters {4, 2, 6} = 4; only row 0 passes theta.
    const std::vector<double> trusts{1.0, std::nan(""), std::nan("")};
    const auto p = clear_cf_oracle(train, target, trusts, 0.0, 0);
    REQUIRE(p.has_value());
    CHECK(*p == doctest::Approx(2.0 + (4.0 - 4.0)));
  }

  SUBCASE("all raters at the item mean collapse to the target mean") {
    RatingMatrix flat(2, 1, {-10, 10});
    flat.set(0, 0, 5.0);
    flat.set(1, 0, 5.0);
    const std::vector<double> trusts{0.9, 0.4};
    const auto p = clear_cf_oracle(flat, target, trusts, 0.0, 0);
    REQUIRE(p.has_value());
    CHECK(*p == doctest::Approx(2.0));
  }

  SUBCASE("hand-computed three-user table") {
    // trusts 0.8, 0.4, 0.8; theta 0.5 keeps rows 0 and 2.
    // mean_0 = 4; p = 2 + (0.8*(4-4) + 0.8*(6-4)) / 1.6 = 3.
    const std::vector<double> trusts{0.8, 0.4, 0.8};
    const auto p = clear_cf_oracle(train, target, trusts, 0.5, 0);
    REQUIRE(p.has_value());
    CHECK(*p == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("no eligible raters") {
    const std::vector<double> low{0.1, 0.1, 0.1};
    CHECK_FALSE(clear_cf_oracle(train, target, low, 0.5, 1).has_value());
    const std::vector<double> high{0.9, 0.9, 0.9};
    CHECK(clear_cf_oracle(train, target, high, 0.5, 1).has_value());
  }
}

TEST_CASE("equal trusts reduce the oracle to the unweighted mean-centred form") {
  Randomness rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    RatingMatrix train(5, 4, {-10, 10});
    for (Index u = 0; u < 5; ++u)
      for (Index i = 0; i < 4; ++i)
        if (rng.uniform(0, 1) < 0.8) train.set(u, i, rng.uniform(-9, 9));

    const std::vector<std::pair<Index, Scalar>> target = {{0, 1.5}, {1, -2.0}};
    const std::vector<double> trusts(5, 0.7);
    for (Index q = 0; q < 4; ++q) {
      const auto p = clear_cf_oracle(train, target, trusts, 0.0, q);

      // Independent from-definition computation: plain average of
      // mean-centred ratings over the raters.
      Scalar sum = 0;
      Index n = 0;
      for (Index u = 0; u < 5; ++u)
        if (train.is_rated(u, q)) {
          sum += train.rating(u, q);
          ++n;
        }
      if (n == 0) {
        CHECK_FALSE(p.has_value());
        continue;
      }
      const Scalar mean_q = sum / static_cast<Scalar>(n);
      Scalar acc = 0;
      for (Index u = 0; u < 5; ++u)
        if (train.is_rated(u, q)) acc += train.rating(u, q) - mean_q;
      const Scalar expected = (1.5 - 2.0) / 2.0 + acc / static_cast<Scalar>(n);
      REQUIRE(p.has_value());
      CHECK(*p == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("spearman and linear fit helpers behave") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> inc{2, 4, 6, 8, 10};
  const std::vector<double> dec{9, 7, 5, 3, 1};
  CHECK(spearman(x, inc) == doctest::Approx(1.0));
  CHECK(spearman(x, dec) == doctest::Approx(-1.0));
  CHECK(linear_fit_r2(x, inc) == doctest::Approx(1.0));
  const std::vector<double> noisy{2.1, 3.9, 6.2, 7.8, 10.1};
  CHECK(linear_fit_r2(x, noisy) >= 0.99);
}
