#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <unistd.h>

#include "sknap/generator.hpp"
#include "sknap/instance.hpp"
#include "sknap/linalg.hpp"

namespace {

sknap::GeneratorConfig base_config(sknap::InstanceType type, std::uint64_t seed, int h) {
  sknap::GeneratorConfig cfg;
  cfg.type = type;
  cfg.R = 100.0;
  cfg.n = 10;
  cfg.cv = 0.1;
  cfg.H = 10;
  cfg.h = h;
  cfg.seed = seed;
  return cfg;
}

std::string temp_path(const char* tag) {
  return "/tmp/sknap_" + std::string(tag) + "_" + std::to_string(::getpid()) + ".json";
}

}  // namespace

TEST_CASE("profit transformation folds salvage into the coefficients") {
  using sknap::transform_profit;

  SECTION("worked example") {
    const auto out = transform_profit({2.0}, 0.5, 10.0, {10.0}, 30.0);
    REQUIRE(out.values.size() == 1);
    CHECK(out.values[0] == 15.0);
    CHECK(out.shortage_cost == 9.5);
    CHECK(out.dropped_constant == 15.0);
  }

  SECTION("zero salvage is the identity") {
    const auto out = transform_profit({3.0, 1.5}, 0.0, 10.0, {4.0, 8.0}, 6.0);
    CHECK(out.values[0] == 12.0);
    CHECK(out.values[1] == 12.0);
    CHECK(out.shortage_cost == 10.0);
    CHECK(out.dropped_constant == 0.0);
  }

  SECTION("salvage at or above the shortage cost is rejected") {
    CHECK_THROWS_AS(transform_profit({2.0}, 10.0, 10.0, {10.0}, 30.0), std::invalid_argument);
    CHECK_THROWS_AS(transform_profit({2.0}, 11.0, 10.0, {10.0}, 30.0), std::invalid_argument);
    CHECK_THROWS_AS(transform_profit({2.0, 1.0}, 0.5, 10.0, {10.0}, 30.0),
                    std::invalid_argument);
  }
}

TEST_CASE("capacity ladder") {
  CHECK(sknap::capacity_level(550.0, 10, 1) == 50.0);
  CHECK(sknap::capacity_level(550.0, 10, 10) == 500.0);
  CHECK(sknap::capacity_level(110.0, 10, 5) == 50.0);
}

TEST_CASE("per-type profit formulas") {
  CHECK(sknap::gen_detail::pc_value(7.0, 3.0) == 9.0);
  CHECK(sknap::gen_detail::pc_value(9.0, 3.0) == 9.0);
  CHECK(sknap::gen_detail::pc_value(9.1, 3.0) == 12.0);
  // At the left edge of the range the ellipse value is d * sqrt(4R^2 - (1-2R)^2).
  const double R = 100.0;
  const double d = 2.0 / 3.0;
  const double at1 = sknap::gen_detail::circle_value(1.0, R, d);
  CHECK(at1 == Catch::Approx(d * std::sqrt(4 * R * R - 199.0 * 199.0)).epsilon(1e-14));
  const double mid = sknap::gen_detail::circle_value(2 * R, R, d);
  CHECK(mid == Catch::Approx(d * 2 * R).epsilon(1e-14));
}

TEST_CASE("generated instances satisfy the type-defining relations") {
  using sknap::InstanceType;
  const std::vector<InstanceType> all = {
      InstanceType::U,  InstanceType::WC, InstanceType::SC,
      InstanceType::ISC, InstanceType::ASC, InstanceType::SS,
      InstanceType::USW, InstanceType::PC, InstanceType::C};

  for (InstanceType type : all) {
    DYNAMIC_SECTION("type " << sknap::type_name(type)) {
      int count = 0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (int h = 1; h <= 10; ++h) {
          const sknap::GeneratorConfig cfg = base_config(type, seed, h);
          const sknap::Instance inst = sknap::generate(cfg);
          ++count;
          REQUIRE(inst.n == cfg.n);

          double total_mu = 0.0;
          for (int i = 0; i < inst.n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double mu = inst.mu[k];
            const double value = inst.values[k];
            REQUIRE(inst.sigma[k] == cfg.cv * mu);
            total_mu += mu;

            if (type == InstanceType::USW) {
              REQUIRE(mu >= 100.0);
              REQUIRE(mu <= 110.0);
            } else if (type == InstanceType::ISC) {
              REQUIRE(mu > 1.0);
              REQUIRE(mu < 110.0 + 1e-12);
            } else {
              REQUIRE(mu >= 1.0);
              REQUIRE(mu <= 100.0);
            }

            switch (type) {
              case InstanceType::U:
                REQUIRE(value >= 1.0);
                REQUIRE(value <= 100.0);
                break;
              case InstanceType::WC: {
                const double lo = std::max(mu - 10.0, 1.0);
                REQUIRE(value >= lo - 1e-12);
                REQUIRE(value <= lo + 20.0 + 1e-12);
                break;
              }
              case InstanceType::SC:
                REQUIRE(value == mu + 10.0);
                break;
              case InstanceType::ISC:
                REQUIRE(mu == value + 10.0);
                break;
              case InstanceType::ASC:
                REQUIRE(value >= mu + 9.8 - 1e-12);
                REQUIRE(value <= mu + 10.2 + 1e-12);
                REQUIRE(value >= 1.0);
                break;
              case InstanceType::SS:
                REQUIRE(value == mu);
                break;
              case InstanceType::USW:
                REQUIRE(value >= 1.0);
                REQUIRE(value <= 100.0);
                break;
              case InstanceType::PC: {
                const double k3 = value / 3.0;
                REQUIRE(std::abs(k3 - std::round(k3)) <= 1e-9);
                REQUIRE(value >= mu - 1e-9);
                REQUIRE(value < mu + 3.0 + 1e-9);
                break;
              }
              case InstanceType::C: {
                const double lhs = (value / (2.0 / 3.0)) * (value / (2.0 / 3.0)) +
                                   (mu - 200.0) * (mu - 200.0);
                REQUIRE(std::abs(lhs - 40000.0) <= 1e-9 * 40000.0);
                break;
              }
            }
          }
          REQUIRE(inst.capacity == sknap::capacity_level(total_mu, 10, h));
          REQUIRE(inst.shortage_cost == 10.0);
          REQUIRE(inst.distribution == "normal");
          REQUIRE(inst.cov.empty());
          REQUIRE(inst.meta.type == sknap::type_name(type));
          REQUIRE(inst.meta.h == h);
          REQUIRE(inst.meta.seed == seed);
        }
      }
      CHECK(count == 1000);
    }
  }
}

TEST_CASE("generation is reproducible and keyed by field") {
  using sknap::InstanceType;

  SECTION("same configuration gives byte-identical text") {
    const sknap::GeneratorConfig cfg = base_config(InstanceType::WC, 77, 4);
    const std::string a = sknap::write_json(sknap::generate(cfg));
    const std::string b = sknap::write_json(sknap::generate(cfg));
    CHECK(a == b);
  }

  SECTION("different seeds differ") {
    sknap::GeneratorConfig cfg = base_config(InstanceType::U, 5, 5);
    const sknap::Instance a = sknap::generate(cfg);
    cfg.seed = 6;
    const sknap::Instance b = sknap::generate(cfg);
    CHECK(a.mu != b.mu);
    CHECK(a.values != b.values);
  }

  SECTION("different batch indices differ") {
    sknap::GeneratorConfig cfg = base_config(InstanceType::U, 5, 5);
    cfg.index = 0;
    const sknap::Instance a = sknap::generate(cfg);
    cfg.index = 1;
    const sknap::Instance b = sknap::generate(cfg);
    CHECK(a.mu != b.mu);
  }

  SECTION("capacity level moves only the capacity") {
    sknap::GeneratorConfig cfg = base_config(InstanceType::SC, 13, 2);
    const sknap::Instance a = sknap::generate(cfg);
    cfg.h = 9;
    const sknap::Instance b = sknap::generate(cfg);
    CHECK(a.mu == b.mu);
    CHECK(a.values == b.values);
    CHECK(a.sigma == b.sigma);
    CHECK(a.capacity != b.capacity);
  }

  SECTION("gamma and lognormal marginals are recorded") {
    sknap::GeneratorConfig cfg = base_config(InstanceType::U, 3, 5);
    cfg.distribution = "gamma";
    CHECK(sknap::generate(cfg).distribution == "gamma");
    cfg.distribution = "lognormal";
    CHECK(sknap::generate(cfg).distribution == "lognormal");
  }
}

TEST_CASE("correlated test beds") {
  using sknap::InstanceType;

  SECTION("constant-correlation covariance") {
    sknap::GeneratorConfig cfg = base_config(InstanceType::U, 21, 5);
    cfg.n = 8;
    cfg.rho = 0.75;
    cfg.correlation = "constant";
    const sknap::Instance inst = sknap::generate(cfg);
    REQUIRE(inst.distribution == "multivariate-normal");
    REQUIRE(inst.cov.size() == 64)
;
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        const double want = (i == j ? 1.0 : 0.75) * inst.sigma[static_cast<std::size_t>(i)] *
                            inst.sigma[static_cast<std::size_t>(j)];
        CHECK(inst.cov[static_cast<std::size_t>(i) * 8 + j] == want);
      }
    }
    CHECK(sknap::la::smallest_eigenvalue(inst.cov, 8) >= -1e-8);
    CHECK(inst.meta.correlation == "constant");
  }

  SECTION("banded covariance decays geometrically") {
    sknap::GeneratorConfig cfg = base_config(InstanceType::SC, 22, 5);
    cfg.n = 8;
    cfg.rho = 0.95;
    cfg.correlation = "banded";
    const sknap::Instance inst = sknap::generate(cfg);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        const double want = (i == j ? 1.0 : std::pow(0.95, std::abs(i - j))) *
                            inst.sigma[static_cast<std::size_t>(i)] *
                            inst.sigma[static_cast<std::size_t>(j)];
        CHECK(inst.cov[static_cast<std::size_t>(i) * 8 + j] == want);
      }
    }
    CHECK(sknap::la::smallest_eigenvalue(inst.cov, 8) >= -1e-8);
    CHECK(inst.meta.correlation == "banded");
  }

  SECTION("PSD across the correlation grid") {
    for (double rho : {0.75, 0.95}) {
      for (const char* structure : {"constant", "banded"}) {
        sknap::GeneratorConfig cfg = base_config(InstanceType::U, 31, 5);
        cfg.n = 12;
        cfg.rho = rho;
        cfg.correlation = structure;
        const sknap::Instance inst = sknap::generate(cfg);
        CHECK(sknap::la::smallest_eigenvalue(inst.cov, 12) >= -1e-8);
      }
    }
  }

  SECTION("correlated non-normal families are rejected") {
    sknap::GeneratorConfig cfg = base_config(InstanceType::U, 1, 5);
    cfg.rho = 0.75;
    cfg.distribution = "gamma";
    CHECK_THROWS_AS(sknap::generate(cfg), std::invalid_argument);
    cfg.distribution = "normal";
    cfg.correlation = "diagonal";
    CHECK_THROWS_AS(sknap::generate(cfg), std::invalid_argument);
  }
}

TEST_CASE("instance JSON round trip") {
  sknap::GeneratorConfig cfg = base_config(sknap::InstanceType::ASC, 111, 7);
  cfg.n = 6;
  cfg.rho = 0.75;
  cfg.correlation = "banded";
  const sknap::Instance inst = sknap::generate(cfg);

  SECTION("text round trip preserves every bit") {
    const std::string text = sknap::write_json(inst);
    const sknap::Instance back = sknap::read_json_text(text);
    CHECK(back.n == inst.n);
    CHECK(back.values == inst.values);
    CHECK(back.mu == inst.mu);
    CHECK(back.sigma == inst.sigma);
    CHECK(back.cov == inst.cov);
    CHECK(back.capacity == inst.capacity);
    CHECK(back.shortage_cost == inst.shortage_cost);
    CHECK(back.distribution == inst.distribution);
    CHECK(back.meta.type == inst.meta.type);
    CHECK(back.meta.R == inst.meta.R);
    CHECK(back.meta.cv == inst.meta.cv);
    CHECK(back.meta.rho == inst.meta.rho);
    CHECK(back.meta.h == inst.meta.h);
    CHECK(back.meta.seed == inst.meta.seed);
    CHECK(back.meta.correlation == inst.meta.correlation);
    CHECK(sknap::write_json(back) == text);
  }

  SECTION("file round trip") {
    const std::string path = temp_path("io");
    sknap::save_json(inst, path);
    const sknap::Instance back = sknap::load_json(path);
    CHECK(sknap::write_json(back) == sknap::write_json(inst));
    std::remove(path.c_str());
  }

  SECTION("malformed input is rejected") {
    CHECK_THROWS(sknap::read_json_text("{ not json"));
    CHECK_THROWS(sknap::read_json_text("{\"n\": 1}"));
    // Negative sigma violates the invariants even with valid syntax.
    CHECK_THROWS_AS(
        sknap::read_json_text(
            "{\"n\":1,\"values\":[5],\"mu\":[4],\"sigma\":[-1],\"capacity\":2,"
            "\"shortage_cost\":10,\"distribution\":\"normal\"}"),
        std::invalid_argument);
    // Covariance demands the multivariate tag and a full matrix.
    CHECK_THROWS_AS(
        sknap::read_json_text(
            "{\"n\":1,\"values\":[5],\"mu\":[4],\"sigma\":[1],\"cov\":[1],\"capacity\":2,"
            "\"shortage_cost\":10,\"distribution\":\"normal\"}"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        sknap::read_json_text(
            "{\"n\":2,\"values\":[5,5],\"mu\":[4,4],\"sigma\":[1,1],\"cov\":[1,0,0],"
            "\"capacity\":2,\"shortage_cost\":10,\"distribution\":\"multivariate-normal\"}"),
        std::invalid_argument);
  }

  SECTION("labels are compact and informative") {
    const std::string label = sknap::instance_label(inst);
    CHECK(label.find("ASC") == 0);
    CHECK(label.find("-n6") != std::string::npos);
    CHECK(label.find("-rho0.75") != std::string::npos);
    CHECK(label.find("-h7") != std::string::npos);
    CHECK(label.find("-s111") != std::string::npos);
  }
}
