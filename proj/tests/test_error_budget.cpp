#include "sknap/error_budget.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

using namespace sknap;

namespace {

LossCache& shared_cache() {
  static LossCache cache;  // in-memory; rows built once per process
  return cache;
}

// The reference selection used across the solver tests: ten items with mean
// weights 44,42,73,15,71,12,13,14,23,15 and coefficient of variation 0.1,
// so V_max = 0.01 * sum(mu_i^2) = 155.58, with shortage cost 10.
constexpr double kVmax = 155.58;
constexpr double kCost = 10.0;

}  // namespace

TEST_CASE("segment selection reproduces the frozen reference ladder") {
  const ErrorBudget b10 = select_segments(10.0, kCost, kVmax, shared_cache());
  CHECK(b10.W == 4);
  CHECK(b10.Q == 8);

  const ErrorBudget b1 = select_segments(1.0, kCost, kVmax, shared_cache());
  CHECK(b1.W == 13);
  CHECK(b1.Q == 620);

  const ErrorBudget b01 =
      select_segments(0.1, kCost, kVmax, shared_cache());
  CHECK(b01.W == 40);
  CHECK(b01.Q == 62023);
}

TEST_CASE("selected counts are minimal and meet both half-budgets") {
  for (double eps : {10.0, 1.0, 0.1}) {
    const ErrorBudget b = select_segments(eps, kCost, kVmax, shared_cache());
    const double half = 0.5 * eps;
    CHECK(b.S_max == Catch::Approx(std::sqrt(kVmax)).epsilon(1e-15));

    // Loss half-budget met at W, violated at W-1.
    CHECK(b.c * b.S_max * b.e_W <= half * (1.0 + 1e-12));
    if (b.W > 1) {
      const double e_prev = shared_cache().get(b.W - 1).max_error;
      CHECK(b.c * b.S_max * e_prev > half);
    }

    // Square-root half-budget met at Q, violated at Q-1.
    CHECK(b.delta_Q == Catch::Approx(std::sqrt(kVmax / b.Q) / 4.0));
    CHECK(b.c * (b.A_max + b.e_W) * b.delta_Q <= half * (1.0 + 1e-12));
    if (b.Q > 1) {
      const double d_prev = std::sqrt(kVmax / (b.Q - 1)) / 4.0;
      CHECK(b.c * (b.A_max + b.e_W) * d_prev > half);
    }

    // The two halves together bound the shortage-term error by epsilon.
    CHECK(b.c * (b.S_max * b.e_W + (b.A_max + b.e_W) * b.delta_Q) <=
          eps * (1.0 + 1e-12));
  }
}

TEST_CASE("loose budgets collapse to the smallest partitions") {
  const ErrorBudget b = select_segments(1e9, kCost, kVmax, shared_cache());
  CHECK(b.W == 1);
  CHECK(b.Q == 1);
}

TEST_CASE("unreachable budgets throw with the reachable accuracy") {
  bool threw = false;
  try {
    select_segments(1e-9, kCost, kVmax, shared_cache(), /*W_cap=*/16);
  } catch (const BudgetError& e) {
    threw = true;
    const double floor16 =
        2.0 * kCost * std::sqrt(kVmax) * shared_cache().get(16).max_error;
    CHECK(e.reachable_epsilon == Catch::Approx(floor16).epsilon(1e-12));
    CHECK(std::string(e.what()).find("reachable") != std::string::npos);
  }
  CHECK(threw);

  // Q cap binds even when the W cap does not.
  CHECK_THROWS_AS(select_segments(0.1, kCost, kVmax, shared_cache(), 128,
                                  /*Q_cap=*/1000),
                  BudgetError);
}

TEST_CASE("invalid arguments are rejected") {
  CHECK_THROWS_AS(select_segments(0.0, kCost, kVmax, shared_cache()),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_segments(1.0, -1.0, kVmax, shared_cache()),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_segments(1.0, kCost, 0.0, shared_cache()),
                  std::invalid_argument);
}
