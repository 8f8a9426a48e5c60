#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "exbound/ou.hpp"
#include "exbound/regime.hpp"
#include "test_util.hpp"

using namespace exbound;
using namespace exbound::testutil;

TEST_CASE("pointwise classification covers the full sign table") {
    struct Case {
        double r, q;
        int boundaries;
        RegionShape shape;
    };
    const Case cases[] = {
        // r > 0
        {0.05, 0.02, 1, RegionShape::BelowStrike},   // r > q
        {0.05, -0.01, 1, RegionShape::BelowStrike},  // q <= 0
        {0.05, 0.00, 1, RegionShape::BelowStrike},
        {0.02, 0.05, 1, RegionShape::BelowRatio},    // 0 < r <= q
        {0.05, 0.05, 1, RegionShape::BelowRatio},    // equality edge
        // r = 0
        {0.00, -0.01, 1, RegionShape::BelowStrike},  // q < 0
        {0.00, 0.00, 0, RegionShape::Empty},
        {0.00, 0.02, 0, RegionShape::Empty},
        // r < 0
        {-0.01, -0.02, 2, RegionShape::Band},        // q < r
        {-0.01, -0.01, 0, RegionShape::Empty},       // q = r edge
        {-0.02, -0.01, 0, RegionShape::Empty},       // q > r
        {-0.01, 0.02, 0, RegionShape::Empty},
    };
    for (const auto& c : cases) {
        CAPTURE(c.r);
        CAPTURE(c.q);
        const PointRegime p = classify_point(c.r, c.q);
        CHECK(p.boundaries == c.boundaries);
        CHECK(p.shape == c.shape);
    }
}

TEST_CASE("timeline segmentation: single regime throughout") {
    const auto segs = segment_timeline(single_boundary_spec());
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].t_begin == doctest::Approx(0.0));
    CHECK(segs[0].t_end == doctest::Approx(1.0));
    CHECK(segs[0].regime.boundaries == 1);
    CHECK(segs[0].regime.shape == RegionShape::BelowStrike);
}

TEST_CASE("timeline segmentation: rate crossing zero upward") {
    // r(t) = 0.02 - 0.04 e^{-1.4 t} crosses zero at ln(2)/1.4; q stays <
    // r-negative early, so a band precedes a single-boundary regime.
    const auto segs = segment_timeline(mixed_spec());
    REQUIRE(segs.size() == 2);
    const double tau1 = 0.49510512897138950673;  // ln 2 / 1.4
    CHECK(std::abs(segs[0].t_end - tau1) <= 1e-6);
    CHECK(segs[1].t_begin == doctest::Approx(segs[0].t_end));
    CHECK(segs[0].regime.boundaries == 2);
    CHECK(segs[0].regime.shape == RegionShape::Band);
    CHECK(segs[1].regime.boundaries == 1);
    CHECK(segs[1].regime.shape == RegionShape::BelowStrike);
    CHECK(segs[0].t_begin == doctest::Approx(0.0));
    CHECK(segs[1].t_end == doctest::Approx(1.0));
}

TEST_CASE("timeline segmentation: rate crossing zero downward") {
    // r(t) = 0.05 e^{-t} - 0.03 crosses zero at ln(5/3); after it the gain
    // region is a band (q < r < 0).
    const auto segs = segment_timeline(floating_spec(0.4));
    REQUIRE(segs.size() == 2);
    const double ts = 0.51082562376599068321;  // ln(5/3)
    CHECK(std::abs(segs[0].t_end - ts) <= 1e-6);
    CHECK(segs[0].regime.boundaries == 1);
    CHECK(segs[0].regime.shape == RegionShape::BelowStrike);
    CHECK(segs[1].regime.boundaries == 2);
    CHECK(segs[1].regime.shape == RegionShape::Band);
}

TEST_CASE("timeline segmentation: empty region throughout") {
    const auto segs = segment_timeline(empty_region_spec());
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].regime.boundaries == 0);
    CHECK(segs[0].regime.shape == RegionShape::Empty);
}

TEST_CASE("terminal boundary values per regime") {
    // Band at maturity: upper = K, lower = K r(T)/q(T) (frozen 40-digit
    // evaluation of the curve ratio).
    const auto band = terminal_boundary_values(band_spec());
    CHECK(band.has_upper);
    CHECK(band.upper == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(band.has_lower);
    CHECK(band.lower == doctest::Approx(15.956942263507803851).epsilon(1e-12));

    // Single boundary below the strike at maturity: upper = K, no lower.
    const auto single = terminal_boundary_values(single_boundary_spec());
    CHECK(single.has_upper);
    CHECK(single.upper == doctest::Approx(100.0).epsilon(1e-14));
    CHECK_FALSE(single.has_lower);

    // Ratio shape at maturity: upper = K r/q.
    ModelSpec ratio = single_boundary_spec();
    ratio.r = ParamCurve::constant(0.02);
    ratio.q = ParamCurve::constant(0.05);
    const auto tr = terminal_boundary_values(ratio);
    CHECK(tr.has_upper);
    CHECK(tr.upper == doctest::Approx(100.0 * 0.02 / 0.05).epsilon(1e-14));
    CHECK_FALSE(tr.has_lower);

    // Empty region: no boundaries at all.
    const auto none = terminal_boundary_values(empty_region_spec());
    CHECK_FALSE(none.has_upper);
    CHECK_FALSE(none.has_lower);
}

TEST_CASE("mean-reverting effective rates and their segmentation") {
    const ModelSpec s = mean_reverting_spec();
    double r_eff = 0.0, q_eff = 0.0;
    effective_rates(s, 0.37, r_eff, q_eff);
    // r_eff = r + kappa theta / K, q_eff = r + kappa (constant curves).
    CHECK(r_eff == doctest::Approx(0.02 + 1.0 * 90.0 / 100.0).epsilon(1e-15));
    CHECK(q_eff == doctest::Approx(0.02 + 1.0).epsilon(1e-15));

    const auto segs = segment_timeline(
        0.0, 1.0,
        [&](double u) {
            double re, qe;
            effective_rates(s, u, re, qe);
            return re;
        },
        [&](double u) {
            double re, qe;
            effective_rates(s, u, re, qe);
            return qe;
        });
    REQUIRE(segs.size() == 1);
    // 0 < r_eff <= q_eff: one boundary at K r_eff / q_eff below the strike.
    CHECK(segs[0].regime.boundaries == 1);
    CHECK(segs[0].regime.shape == RegionShape::BelowRatio);
}
