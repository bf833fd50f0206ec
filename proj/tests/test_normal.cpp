#include "sknap/normal.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "testutil.hpp"

using namespace sknap;

TEST_CASE("pdf matches known values and symmetry") {
  CHECK(norm::pdf(0.0) == Catch::Approx(0.39894228040143267).epsilon(1e-15));
  CHECK(norm::pdf(1.0) == Catch::Approx(0.24197072451914337).epsilon(1e-15));
  CHECK(norm::pdf(2.5) == Catch::Approx(0.017528300493568591).epsilon(1e-14));
  for (double x : {0.3, 1.7, 4.2, 7.9}) {
    CHECK(norm::pdf(x) == norm::pdf(-x));
  }
}

TEST_CASE("cdf agrees with quadrature oracle") {
  for (double x = -8.0; x <= 8.0 + 1e-12; x += 0.37) {
    const double want = testutil::oracle_normal_cdf(x);
    CHECK(norm::cdf(x) == Catch::Approx(want).margin(1e-13));
  }
  CHECK(norm::cdf(1.96) ==
        Catch::Approx(0.97500210485177952).epsilon(1e-14));
  CHECK(norm::cdf(0.0) == 0.5);
}

TEST_CASE("sf is the complement without cancellation") {
  for (double x : {-6.0, -1.0, 0.0, 0.5, 3.0, 6.0}) {
    CHECK(norm::sf(x) == Catch::Approx(norm::cdf(-x)).epsilon(1e-15));
  }
  // Deep tail: survival stays meaningful where 1 - cdf would round to zero.
  CHECK(norm::sf(10.0) == Catch::Approx(7.6198530241605945e-24).epsilon(1e-12));
  CHECK(norm::sf(37.5) > 0.0);
}

TEST_CASE("quantile inverts the cdf to high accuracy") {
  CHECK(norm::quantile(0.975) ==
        Catch::Approx(1.9599639845400545).epsilon(1e-14));
  CHECK(norm::quantile(0.5) == Catch::Approx(0.0).margin(1e-15));

  testutil::SplitMix64 rng(20260817ULL);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform(1e-9, 1.0 - 1e-9);
    const double x = norm::quantile(p);
    CHECK(norm::cdf(x) == Catch::Approx(p).epsilon(1e-12).margin(1e-15));
  }
  // Cross-check against the bisection oracle on a coarse set.
  for (double p : {0.001, 0.02, 0.25, 0.5, 0.77, 0.96, 0.9995}) {
    CHECK(norm::quantile(p) ==
          Catch::Approx(testutil::oracle_normal_quantile(p)).margin(5e-12));
  }
}

TEST_CASE("quantile handles tails and rejects improper inputs") {
  for (double p : {1e-300, 1e-100, 1e-12, 1.0 - 1e-12}) {
    const double x = norm::quantile(p);
    CHECK(std::isfinite(x));
    // Round trip in the direction that is numerically well-posed.
    if (p < 0.5) {
      CHECK(norm::cdf(x) == Catch::Approx(p).epsilon(1e-9));
    } else {
      CHECK(norm::sf(x) == Catch::Approx(1.0 - p).epsilon(1e-6));
    }
  }
  CHECK(norm::quantile(1e-300) < -37.0);
  CHECK_THROWS_AS(norm::quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(norm::quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(norm::quantile(-0.5), std::domain_error);
  CHECK_THROWS_AS(norm::quantile(1.5), std::domain_error);
}

TEST_CASE("quantile is strictly increasing") {
  double prev = norm::quantile(1e-6);
  for (double p = 1e-4; p < 1.0 - 1e-7; p += 1e-3) {
    const double x = norm::quantile(p);
    CHECK(x > prev);
    prev = x;
  }
}
