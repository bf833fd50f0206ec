#include "sknap/sqrt_pwl.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "testutil.hpp"

using namespace sknap;

TEST_CASE("grid sizing and first-segment slope") {
  const SqrtPwl f = build_sqrt_pwl(10.0, 1.0, SqrtBoundKind::lower);
  CHECK(f.q == 10);
  CHECK(f.slope.size() == 10);
  CHECK(f.slope[0] == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(f.shift == 0.0);

  const SqrtPwl g = build_sqrt_pwl(10.0, 0.1, SqrtBoundKind::upper);
  CHECK(g.q == 100);
  CHECK(g.slope[0] == Catch::Approx(3.1622776601683795).epsilon(1e-14));
  CHECK(g.shift == Catch::Approx(0.25 * std::sqrt(0.1)).epsilon(1e-15));
  CHECK(g.shift == Catch::Approx(0.079056941504209485).epsilon(1e-14));

  // Non-divisible steps round the segment count up.
  CHECK(build_sqrt_pwl(1.0, 0.3, SqrtBoundKind::lower).q == 4);
}

TEST_CASE("frozen point evaluations") {
  const SqrtPwl lo = build_sqrt_pwl(10.0, 1.0, SqrtBoundKind::lower);
  // Chord between sqrt(1) and sqrt(2) evaluated at 1.5.
  CHECK(lo.eval(1.5) ==
        Catch::Approx(0.5 * (1.0 + std::sqrt(2.0))).epsilon(1e-15));
  CHECK(lo.eval(1.5) == Catch::Approx(1.2071067811865476).epsilon(1e-14));
  CHECK(lo.eval(0.0) == 0.0);
  CHECK(lo.eval(4.0) == Catch::Approx(2.0).epsilon(1e-14));

  const SqrtPwl hi = build_sqrt_pwl(10.0, 1.0, SqrtBoundKind::upper);
  CHECK(hi.eval(1.5) ==
        Catch::Approx(0.25 + 0.5 * (1.0 + std::sqrt(2.0))).epsilon(1e-15));
  CHECK(hi.eval(0.0) == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("slopes decrease strictly (concavity of the chords)") {
  const SqrtPwl f = build_sqrt_pwl(155.58, 155.58 / 620.0,
                                   SqrtBoundKind::lower);
  CHECK(f.q == 620);
  for (std::size_t k = 1; k < f.slope.size(); ++k) {
    CHECK(f.slope[k] < f.slope[k - 1]);
  }
}

TEST_CASE("bounds sandwich sqrt and the gap peaks at step/4") {
  for (double s : {1.0, 0.1, 0.01}) {
    const double v_max = 10.0;
    const SqrtPwl lo = build_sqrt_pwl(v_max, s, SqrtBoundKind::lower);
    const SqrtPwl hi = build_sqrt_pwl(v_max, s, SqrtBoundKind::upper);

    double worst_lo = 0.0, worst_hi = 0.0;
    testutil::SplitMix64 rng(991);
    for (int i = 0; i < 10000; ++i) {
      const double v = rng.uniform(0.0, v_max);
      const double root = std::sqrt(v);
      const double fl = lo.eval(v);
      const double fh = hi.eval(v);
      CHECK(fl <= root + 1e-12);
      CHECK(root <= fh + 1e-12);
      worst_lo = std::max(worst_lo, root - fl);
      worst_hi = std::max(worst_hi, fh - root);
    }
    const double bound = 0.25 * std::sqrt(s);
    CHECK(worst_lo <= bound + 1e-12);
    CHECK(worst_hi <= bound + 1e-12);
    // The bound is attained at v = s/4 (lower) and at breakpoints (upper).
    CHECK(std::sqrt(s / 4.0) - lo.eval(s / 4.0) ==
          Catch::Approx(bound).epsilon(1e-12));
    CHECK(hi.eval(s) - std::sqrt(s) == Catch::Approx(bound).epsilon(1e-12));
  }
}

TEST_CASE("evaluation agrees with an independent interpolation") {
  const SqrtPwl f = build_sqrt_pwl(7.3, 0.4, SqrtBoundKind::lower);
  testutil::SplitMix64 rng(5150);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.uniform(0.0, 7.3);
    const auto k = static_cast<long long>(std::floor(v / 0.4));
    const double a = 0.4 * static_cast<double>(k);
    const double b = a + 0.4;
    const double t = (v - a) / 0.4;
    const double want = (1.0 - t) * std::sqrt(a) + t * std::sqrt(b);
    CHECK(f.eval(v) == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("segment-count and normalised builders") {
  const SqrtPwl f = build_sqrt_pwl_segments(10.0, 100, SqrtBoundKind::lower);
  CHECK(f.q == 100);
  CHECK(f.step == Catch::Approx(0.1).epsilon(1e-15));

  const SqrtPwl g =
      build_sqrt_pwl_normalised(155.58, 0.001, SqrtBoundKind::upper);
  CHECK(g.q == 1000);
  CHECK(g.step == Catch::Approx(0.15558).epsilon(1e-12));
  CHECK(g.shift == Catch::Approx(0.25 * std::sqrt(0.15558)).epsilon(1e-14));
}

TEST_CASE("domain and argument errors") {
  const SqrtPwl f = build_sqrt_pwl(10.0, 1.0, SqrtBoundKind::lower);
  CHECK_THROWS_AS(f.eval(-0.1), std::domain_error);
  CHECK_THROWS_AS(f.eval(10.5), std::domain_error);
  CHECK_THROWS_AS(build_sqrt_pwl(10.0, 0.0, SqrtBoundKind::lower),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_sqrt_pwl(10.0, 20.0, SqrtBoundKind::lower),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_sqrt_pwl(-1.0, 1.0, SqrtBoundKind::lower),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_sqrt_pwl(10.0, 1e-5, SqrtBoundKind::lower),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_sqrt_pwl_segments(10.0, 0, SqrtBoundKind::lower),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      build_sqrt_pwl_normalised(10.0, 0.0, SqrtBoundKind::lower),
      std::invalid_argument);
}
