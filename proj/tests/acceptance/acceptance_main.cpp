// Acceptance gate: one pass/fail line per criterion.
//
// Usage:
//   sknap_acceptance                 run every criterion
//   sknap_acceptance --criterion N   run a single criterion
//   sknap_acceptance --list          list criteria without running

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "criteria.hpp"

namespace {

struct Criterion {
  int id;
  const char* name;
  bool (*run)(std::string&);
};

const std::vector<Criterion>& registry() {
  static const std::vector<Criterion> all = {
      {1, "loss-bounds-sandwich", criterion01_loss_sandwich},
      {2, "partial-mass-identity", criterion02_partial_mass_identity},
      {3, "equal-probability-rate", criterion03_equal_probability_rate},
      {4, "sqrt-bound-deviation", criterion04_sqrt_deviation},
      {5, "segment-ladder", criterion05_segment_ladder},
      {6, "bracket-and-cuts", criterion06_bracket_and_cuts},
      {7, "correlated-bracket", criterion07_correlated_bracket},
      {8, "normal-approximation", criterion08_normal_approximation},
      {9, "oracle-gradients", criterion09_oracle_gradients},
      {10, "sample-average", criterion10_sample_average},
      {11, "dynamic-recursion", criterion11_dynamic_recursion},
      {12, "receding-horizon", criterion12_receding_horizon},
      {13, "reproducibility", criterion13_reproducibility},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  bool list = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--list") == 0) {
      list = true;
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", argv[i]);
      return 2;
    }
  }

  if (list) {
    for (const Criterion& c : registry()) {
      std::printf("%2d  %s\n", c.id, c.name);
    }
    return 0;
  }

  int failures = 0;
  int ran = 0;
  for (const Criterion& c : registry()) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    std::string detail;
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    } catch (...) {
      detail = "unknown exception";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("ACCEPTANCE %02d %-24s %s  (%.2fs)%s%s\n", c.id, c.name,
                ok ? "PASS" : "FAIL", secs, detail.empty() ? "" : "  ",
                detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion with id %d\n", only);
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
