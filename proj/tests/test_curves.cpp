#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "exbound/curves.hpp"
#include "exbound/num.hpp"
#include "test_util.hpp"

using namespace exbound;
using namespace exbound::testutil;

TEST_CASE("constant curve: value and closed-form integrals") {
    const auto c = ParamCurve::constant(0.07);
    CHECK(c(0.0) == 0.07);
    CHECK(c(123.0) == 0.07);
    CHECK(c.integral(0.25, 1.75) == doctest::Approx(0.07 * 1.5).epsilon(1e-15));
    CHECK(c.square_integral(0.25, 1.75) ==
          doctest::Approx(0.07 * 0.07 * 1.5).epsilon(1e-15));
    // Signed orientation.
    CHECK(c.integral(1.75, 0.25) == doctest::Approx(-0.07 * 1.5).epsilon(1e-15));
}

TEST_CASE("exp_affine curve value") {
    const auto g = ParamCurve::exp_affine(0.05, 0.5, 0.02);
    CHECK(g(0.0) == doctest::Approx(0.07).epsilon(1e-15));
    CHECK(g(2.0) == doctest::Approx(0.05 * std::exp(-1.0) + 0.02).epsilon(1e-15));
}

TEST_CASE("exp_affine closed-form integral against a frozen reference") {
    // int_0^1 (0.05 e^{-t} - 0.03) dt = 0.05 (1 - 1/e) - 0.03, 40-digit value.
    const auto g = ParamCurve::exp_affine(0.05, 1.0, -0.03);
    CHECK(g.integral(0.0, 1.0) ==
          doctest::Approx(0.0016060279414278839202).epsilon(1e-14));
}

TEST_CASE("exp_affine square integral against a frozen reference") {
    // int_{0.3}^{1.7} (0.05 e^{-0.5 t} + 0.02)^2 dt, 40-digit value.
    const auto g = ParamCurve::exp_affine(0.05, 0.5, 0.02);
    CHECK(g.square_integral(0.3, 1.7) ==
          doctest::Approx(0.0036885089194777825888).epsilon(1e-13));
}

TEST_CASE("closed-form integrals agree with adaptive quadrature") {
    const ParamCurve curves[] = {
        ParamCurve::exp_affine(0.05, 0.5, 0.0),
        ParamCurve::exp_affine(-0.2, -0.5, 0.13),  // growing exponential
        ParamCurve::exp_affine(0.6, -0.2, 0.0),
        ParamCurve::exp_affine(0.04, 0.0, 0.01),   // b = 0 degenerate branch
        ParamCurve::exp_affine(0.04, 1e-13, 0.01), // |b| below the branch cut
        ParamCurve::constant(0.3),
    };
    const double t = 0.2, u = 1.9;
    for (const auto& g : curves) {
        const double iq = num::adaptive_simpson([&](double s) { return g(s); }, t, u);
        const double sq =
            num::adaptive_simpson([&](double s) { return g(s) * g(s); }, t, u);
        CHECK(g.integral(t, u) == doctest::Approx(iq).epsilon(1e-11));
        CHECK(g.square_integral(t, u) == doctest::Approx(sq).epsilon(1e-11));
    }
}

TEST_CASE("model spec discounting is multiplicative and variance additive") {
    const ModelSpec s = single_boundary_spec();
    const double t = 0.1, m = 0.55, u = 0.95;
    CHECK(s.discount(t, m) * s.discount(m, u) ==
          doctest::Approx(s.discount(t, u)).epsilon(1e-14));
    CHECK(s.dividend_discount(t, m) * s.dividend_discount(m, u) ==
          doctest::Approx(s.dividend_discount(t, u)).epsilon(1e-14));
    CHECK(s.total_var(t, m) + s.total_var(m, u) ==
          doctest::Approx(s.total_var(t, u)).epsilon(1e-14));
    CHECK(s.discount(t, t) == 1.0);
}

TEST_CASE("spec validation rejects unusable descriptions") {
    CHECK_NOTHROW(single_boundary_spec().validate());
    CHECK_NOTHROW(mean_reverting_spec().validate());

    ModelSpec bad = single_boundary_spec();
    bad.strike = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = single_boundary_spec();
    bad.strike = -5.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = single_boundary_spec();
    bad.maturity = bad.valuation_time;  // empty horizon
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = single_boundary_spec();
    bad.sigma = ParamCurve::constant(0.0);  // vanishing volatility
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = single_boundary_spec();
    bad.sigma = ParamCurve::exp_affine(0.3, -2.0, -0.5);  // turns negative
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = mean_reverting_spec();
    bad.kappa = ParamCurve::constant(-0.5);  // negative reversion speed
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
