#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "exbound/gbm.hpp"
#include "exbound/num.hpp"
#include "test_util.hpp"

using namespace exbound;
using namespace exbound::testutil;

namespace {

ModelSpec constant_spec() {
    ModelSpec s;
    s.kind = ModelKind::Gbm;
    s.strike = 100.0;
    s.maturity = 1.0;
    s.valuation_time = 0.0;
    s.r = ParamCurve::constant(0.05);
    s.q = ParamCurve::constant(0.02);
    s.sigma = ParamCurve::constant(0.3);
    return s;
}

}  // namespace

TEST_CASE("log-moneyness pair on constant curves") {
    // x = y, r - q = 0.03, sigma^2 = 0.09 over one year:
    //   d+ = -(0.03 + 0.045)/0.3 = -0.25,  d- = -(0.03 - 0.045)/0.3 = 0.05.
    const ModelSpec s = constant_spec();
    double dp = 0.0, dm = 0.0;
    gbm_d_pm(s, 100.0, 100.0, 0.0, 1.0, dp, dm);
    CHECK(dp == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(dm == doctest::Approx(0.05).epsilon(1e-14));
    // Scale invariance in (x, y).
    double dp2 = 0.0, dm2 = 0.0;
    gbm_d_pm(s, 50.0, 50.0, 0.0, 1.0, dp2, dm2);
    CHECK(dp2 == doctest::Approx(dp).epsilon(1e-14));
    CHECK(dm2 == doctest::Approx(dm).epsilon(1e-14));
}

TEST_CASE("European put on decaying curves against frozen references") {
    // 40-digit evaluation of the closed form on the decaying-rate model.
    const ModelSpec s = single_boundary_spec();
    CHECK(european_put_gbm(s, 0.0, 80.0) ==
          doctest::Approx(21.452472850537209228).epsilon(1e-12));
    CHECK(european_put_gbm(s, 0.0, 100.0) ==
          doctest::Approx(10.584211918643150187).epsilon(1e-12));
    CHECK(european_put_gbm(s, 0.0, 120.0) ==
          doctest::Approx(4.7014694323251240266).epsilon(1e-12));
    CHECK(european_call_gbm(s, 0.0, 100.0) ==
          doctest::Approx(12.646139599770420572).epsilon(1e-12));
}

TEST_CASE("European put-call parity across times and spots") {
    const ModelSpec s = single_boundary_spec();
    for (double t : {0.0, 0.35, 0.8}) {
        for (double x : {40.0, 80.0, 100.0, 130.0, 250.0}) {
            const double c = european_call_gbm(s, t, x);
            const double p = european_put_gbm(s, t, x);
            const double fwd = x * s.dividend_discount(t, s.maturity) -
                               s.strike * s.discount(t, s.maturity);
            CHECK(c - p == doctest::Approx(fwd).epsilon(1e-12));
        }
    }
}

TEST_CASE("European put limits") {
    const ModelSpec s = single_boundary_spec();
    // x -> 0: discounted strike.
    CHECK(european_put_gbm(s, 0.0, 1e-12) ==
          doctest::Approx(100.0 * s.discount(0.0, 1.0)).epsilon(1e-9));
    // Deep out of the money: vanishes.
    CHECK(european_put_gbm(s, 0.0, 1e5) == doctest::Approx(0.0).epsilon(1e-12));
    // At and past maturity: intrinsic value.
    CHECK(european_put_gbm(s, 1.0, 90.0) == doctest::Approx(10.0));
    CHECK(european_put_gbm(s, 1.2, 120.0) == doctest::Approx(0.0));
}

TEST_CASE("European put is decreasing and convex in the spot") {
    const ModelSpec s = band_spec();  // negative rates stress the formulas
    double prev = european_put_gbm(s, 0.0, 20.0);
    for (double x = 25.0; x <= 200.0; x += 5.0) {
        const double here = european_put_gbm(s, 0.0, x);
        CHECK(here <= prev + 1e-12);
        prev = here;
    }
    for (double x : {40.0, 70.0, 100.0, 150.0}) {
        const double mid = european_put_gbm(s, 0.0, x);
        const double lo = european_put_gbm(s, 0.0, x - 10.0);
        const double hi = european_put_gbm(s, 0.0, x + 10.0);
        CHECK(lo + hi >= 2.0 * mid - 1e-10);
    }
}

TEST_CASE("truncated moments against frozen references") {
    // Raw truncated moments of the lognormal transition law from (0, 100)
    // to u = 1 at level b = 110, 40-digit references.
    const ModelSpec s = single_boundary_spec();
    GbmBackend be(s);
    double p1 = 0.0, p2 = 0.0;
    be.functionals(0.0, 100.0, 1.0, 110.0, p1, p2);
    CHECK(p1 == doctest::Approx(0.65430418877335556967).epsilon(1e-12));
    CHECK(p2 == doctest::Approx(55.017552509746843045).epsilon(1e-12));
}

TEST_CASE("truncated moments: saturation and additivity") {
    const ModelSpec s = single_boundary_spec();
    GbmBackend be(s);
    // b -> infinity: total mass one, total first moment = forward growth.
    double p1 = 0.0, p2 = 0.0;
    be.functionals(0.0, 100.0, 1.0, 1e9, p1, p2);
    CHECK(p1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p2 == doctest::Approx(102.14467547410481592).epsilon(1e-12));
    // b -> 0: nothing.
    be.functionals(0.0, 100.0, 1.0, 1e-9, p1, p2);
    CHECK(p1 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p2 == doctest::Approx(0.0).epsilon(1e-12));
    // Lower + upper moments recombine to the totals at any split level.
    for (double b : {60.0, 95.0, 130.0}) {
        double l1 = 0.0, l2 = 0.0, u1 = 0.0, u2 = 0.0;
        be.functionals(0.2, 90.0, 0.9, b, l1, l2);
        be.functionals_upper(0.2, 90.0, 0.9, b, u1, u2);
        CHECK(l1 + u1 == doctest::Approx(1.0).epsilon(1e-12));
        const double growth =
            90.0 * std::exp(s.r.integral(0.2, 0.9) - s.q.integral(0.2, 0.9));
        CHECK(l2 + u2 == doctest::Approx(growth).epsilon(1e-12));
        // Monotonicity in b.
        double m1 = 0.0, m2 = 0.0;
        be.functionals(0.2, 90.0, 0.9, b + 10.0, m1, m2);
        CHECK(m1 >= l1 - 1e-14);
        CHECK(m2 >= l2 - 1e-12);
    }
}

TEST_CASE("normalized moments equal the distribution and growth factors") {
    // psi1 = Phi(d-), psi2 = (Dq/D) Phi(d+) with d evaluated at the level.
    const ModelSpec s = band_spec();
    for (double b : {50.0, 100.0, 160.0}) {
        double p1 = 0.0, p2 = 0.0;
        psi1_psi2(s, 0.1, 85.0, 0.8, b, p1, p2);
        double dp = 0.0, dm = 0.0;
        gbm_d_pm(s, 85.0, b, 0.1, 0.8, dp, dm);
        const double ratio =
            s.dividend_discount(0.1, 0.8) / s.discount(0.1, 0.8);
        CHECK(p1 == doctest::Approx(num::norm_cdf(dm)).epsilon(1e-13));
        CHECK(p2 == doctest::Approx(ratio * num::norm_cdf(dp)).epsilon(1e-13));
    }
}

TEST_CASE("put-call symmetry under curve exchange") {
    // C(x, K; r, q) = P(K, x; q, r): swapping spot with strike and the two
    // rate curves maps the European call onto the European put.
    const ModelSpec s = single_boundary_spec();
    ModelSpec swapped = s;
    swapped.r = s.q;
    swapped.q = s.r;
    std::mt19937 rng(911);
    std::uniform_real_distribution<double> ux(40.0, 220.0);
    std::uniform_real_distribution<double> ut(0.0, 0.99);
    for (int i = 0; i < 200; ++i) {
        const double x = ux(rng);
        const double t = ut(rng);
        ModelSpec sw = swapped;
        sw.strike = x;
        const double call = european_call_gbm(s, t, x);  // strike 100
        const double put = european_put_gbm(sw, t, 100.0);
        CHECK(call == doctest::Approx(put).epsilon(1e-12));
    }
}
