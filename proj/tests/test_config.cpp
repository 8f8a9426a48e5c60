#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "exbound/config.hpp"

using namespace exbound;

namespace {

const char* kMinimalGbm = R"(
model {
  kind = gbm
  strike = 100
  maturity = 1
  r     { kind = constant  value = 0.05 }
  q     { kind = constant  value = 0.02 }
  sigma { kind = constant  value = 0.3 }
}
)";

std::string with_line(const std::string& base, const std::string& extra) {
    return base + "\n" + extra + "\n";
}

}  // namespace

TEST_CASE("minimal configuration fills every default") {
    const RunConfig cfg = parse_config(kMinimalGbm, "mini.cfg");
    CHECK(cfg.model.kind == ModelKind::Gbm);
    CHECK(cfg.model.strike == 100.0);
    CHECK(cfg.model.maturity == 1.0);
    CHECK(cfg.model.valuation_time == 0.0);
    CHECK(cfg.model.r(0.3) == doctest::Approx(0.05));
    CHECK(cfg.model.q(0.3) == doctest::Approx(0.02));
    CHECK(cfg.model.sigma(0.3) == doctest::Approx(0.3));

    // Solver defaults.
    CHECK(cfg.solver.n_nodes == 200);
    CHECK(cfg.solver.root_ftol_rel == doctest::Approx(1e-12));
    CHECK(cfg.solver.converge_tol_rel == doctest::Approx(1e-8));
    CHECK(cfg.solver.small_eps_rel == doctest::Approx(1e-6));
    CHECK(cfg.solver.gap_eps_rel == doctest::Approx(1e-4));
    CHECK(cfg.solver.max_iter == 80);

    // Price defaults: strike multiples and the valuation time.
    REQUIRE(cfg.price.spots.size() == 5);
    CHECK(cfg.price.spots.front() == doctest::Approx(60.0));
    CHECK(cfg.price.spots.back() == doctest::Approx(140.0));
    REQUIRE(cfg.price.times.size() == 1);
    CHECK(cfg.price.times[0] == 0.0);

    // Hedge defaults.
    CHECK(cfg.hedge.spot == doctest::Approx(100.0));
    CHECK(cfg.hedge.time == 0.0);
    CHECK(cfg.hedge.n_slices == 1024);

    // Verify defaults: spots fall back to the price spots.
    CHECK(cfg.verify.rel_tol == doctest::Approx(0.002));
    CHECK(cfg.verify.abs_tol_rel == doctest::Approx(0.005));
    CHECK(cfg.verify.boundary_cells == 2);
    CHECK(cfg.verify.boundary_skirt == doctest::Approx(0.05));
    CHECK(cfg.verify.fd.n_space == 1700);
    CHECK(cfg.verify.fd.n_time == 1700);
    CHECK(cfg.verify.spots == cfg.price.spots);

    CHECK(cfg.out_dir == "out");
    CHECK(cfg.source_name == "mini.cfg");
    CHECK_FALSE(cfg.raw_text.empty());
}

TEST_CASE("every shipped configuration file parses") {
    for (const char* path : {
             "configs/single_boundary.cfg",
             "configs/band_narrow_gap.cfg",
             "configs/mixed_switch.cfg",
             "configs/floating_sweep.cfg",
             "configs/mean_reverting.cfg",
             "configs/empty_region.cfg",
         }) {
        CAPTURE(path);
        CHECK_NOTHROW(load_config(path));
    }

    const RunConfig sweep = load_config("configs/floating_sweep.cfg");
    REQUIRE(sweep.sweep.sigmas.size() == 5);
    CHECK(sweep.sweep.sigmas[0] == doctest::Approx(0.2));
    CHECK(sweep.sweep.sigmas[2] == doctest::Approx(0.5087));

    const RunConfig ou = load_config("configs/mean_reverting.cfg");
    CHECK(ou.model.kind == ModelKind::Ou);
    CHECK(ou.model.kappa(0.5) == doctest::Approx(1.0));
    CHECK(ou.model.theta(0.5) == doctest::Approx(90.0));
    CHECK(ou.hedge.n_slices == 1024);
    REQUIRE(ou.verify.spots.size() == 3);
    CHECK(ou.verify.spots[1] == doctest::Approx(100.0));
}

TEST_CASE("exp_affine curve parsing with default c") {
    const RunConfig cfg = parse_config(R"(
model {
  kind = gbm
  strike = 100
  maturity = 2
  valuation_time = 0.5
  r     { kind = exp_affine  a = 0.05  b = 0.5 }
  q     { kind = constant  value = 0 }
  sigma { kind = constant  value = 0.2 }
}
)",
                                       "c.cfg");
    CHECK(cfg.model.r(0.0) == doctest::Approx(0.05));
    CHECK(cfg.model.valuation_time == doctest::Approx(0.5));
    REQUIRE(cfg.price.times.size() == 1);
    CHECK(cfg.price.times[0] == doctest::Approx(0.5));
}

TEST_CASE("errors carry the source name and line number") {
    // Unknown key inside model.
    const std::string bad1 = R"(model {
  kind = gbm
  strike = 100
  maturity = 1
  frobnicate = 3
  r     { kind = constant  value = 0.05 }
  q     { kind = constant  value = 0.02 }
  sigma { kind = constant  value = 0.3 }
})";
    try {
        parse_config(bad1, "bad1.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad1.cfg:5") != std::string::npos);
        CHECK(msg.find("frobnicate") != std::string::npos);
    }

    // Unknown section.
    CHECK_THROWS_AS(
        parse_config(with_line(kMinimalGbm, "mystery { x = 1 }"), "b.cfg"),
        ConfigError);

    // Malformed number.
    CHECK_THROWS_AS(parse_config(R"(
model {
  kind = gbm
  strike = pony
  maturity = 1
  r     { kind = constant  value = 0.05 }
  q     { kind = constant  value = 0.02 }
  sigma { kind = constant  value = 0.3 }
}
)",
                                 "n.cfg"),
                    ConfigError);

    // Duplicate key.
    CHECK_THROWS_AS(parse_config(R"(
model {
  kind = gbm
  strike = 100
  strike = 90
  maturity = 1
  r     { kind = constant  value = 0.05 }
  q     { kind = constant  value = 0.02 }
  sigma { kind = constant  value = 0.3 }
}
)",
                                 "d.cfg"),
                    ConfigError);

    // Missing required field (no sigma).
    CHECK_THROWS_AS(parse_config(R"(
model {
  kind = gbm
  strike = 100
  maturity = 1
  r     { kind = constant  value = 0.05 }
  q     { kind = constant  value = 0.02 }
}
)",
                                 "m.cfg"),
                    ConfigError);

    // Unbalanced braces.
    CHECK_THROWS_AS(parse_config("model {\n kind = gbm\n", "u.cfg"), ConfigError);

    // Carry curve is rejected for the mean-reverting model.
    CHECK_THROWS_AS(parse_config(R"(
model {
  kind = ou
  strike = 100
  maturity = 1
  r     { kind = constant  value = 0.02 }
  q     { kind = constant  value = 0.01 }
  sigma { kind = constant  value = 20 }
  kappa { kind = constant  value = 1 }
  theta { kind = constant  value = 90 }
}
)",
                                 "ou.cfg"),
                    ConfigError);

    // Mean-reversion curves are rejected for the lognormal model.
    CHECK_THROWS_AS(
        parse_config(R"(
model {
  kind = gbm
  strike = 100
  maturity = 1
  r     { kind = constant  value = 0.05 }
  q     { kind = constant  value = 0.02 }
  sigma { kind = constant  value = 0.3 }
  kappa { kind = constant  value = 1 }
}
)",
                     "k.cfg"),
        ConfigError);

    // Unreadable path.
    CHECK_THROWS_AS(load_config("configs/definitely_not_here.cfg"), ConfigError);
}

TEST_CASE("config_hash is 64-bit FNV-1a in hex") {
    // Published FNV-1a test vectors.
    CHECK(config_hash("") == "cbf29ce484222325");
    CHECK(config_hash("a") == "af63dc4c8601ec8c");
    CHECK(config_hash("hello") == "a430d84680aabd0b");
    // Deterministic and sensitive to content.
    CHECK(config_hash(kMinimalGbm) == config_hash(kMinimalGbm));
    CHECK(config_hash(kMinimalGbm) != config_hash(std::string(kMinimalGbm) + " "));
}
