#pragma once

#include <cmath>

#include "exbound/curves.hpp"

// Model descriptions shared by the test suites.  Each returns the same
// parameter set as the matching file under configs/, hard-coded so the
// library-level tests do not depend on the config parser.
namespace exbound::testutil {

// Decaying positive rate and carry, r > q throughout: one boundary.
inline ModelSpec single_boundary_spec() {
    ModelSpec s;
    s.kind = ModelKind::Gbm;
    s.strike = 100.0;
    s.maturity = 1.0;
    s.valuation_time = 0.0;
    s.r = ParamCurve::exp_affine(0.05, 0.5, 0.0);
    s.q = ParamCurve::exp_affine(0.02, 0.2, 0.0);
    s.sigma = ParamCurve::constant(0.3);
    return s;
}

// q < r < 0 throughout: exercise region is a band with a narrow waist.
inline ModelSpec band_spec(double sigma = 0.3) {
    ModelSpec s;
    s.kind = ModelKind::Gbm;
    s.strike = 100.0;
    s.maturity = 1.0;
    s.valuation_time = 0.0;
    s.r = ParamCurve::exp_affine(-0.1, 0.2, 0.05);
    s.q = ParamCurve::exp_affine(-0.2, -0.5, 0.13);
    s.sigma = ParamCurve::constant(sigma);
    return s;
}

// Rate crossing zero mid-horizon: band first, single boundary after.
inline ModelSpec mixed_spec() {
    ModelSpec s;
    s.kind = ModelKind::Gbm;
    s.strike = 100.0;
    s.maturity = 1.0;
    s.valuation_time = 0.0;
    s.r = ParamCurve::exp_affine(-0.04, 1.4, 0.02);
    s.q = ParamCurve::exp_affine(-0.05, -0.5, -0.01);
    s.sigma = ParamCurve::exp_affine(0.6, -0.2, 0.0);
    return s;
}

// Rate and carry both crossing zero; the boundary topology depends on the
// volatility level.
inline ModelSpec floating_spec(double sigma) {
    ModelSpec s;
    s.kind = ModelKind::Gbm;
    s.strike = 100.0;
    s.maturity = 1.0;
    s.valuation_time = 0.0;
    s.r = ParamCurve::exp_affine(0.05, 1.0, -0.03);
    s.q = ParamCurve::exp_affine(0.01, -0.8, -0.04);
    s.sigma = ParamCurve::constant(sigma);
    return s;
}

// Mean-reverting underlying with an absorbing barrier at zero.
inline ModelSpec mean_reverting_spec() {
    ModelSpec s;
    s.kind = ModelKind::Ou;
    s.strike = 100.0;
    s.maturity = 1.0;
    s.valuation_time = 0.0;
    s.r = ParamCurve::constant(0.02);
    s.sigma = ParamCurve::constant(20.0);
    s.kappa = ParamCurve::constant(1.0);
    s.theta = ParamCurve::constant(90.0);
    return s;
}

// r < q < 0 throughout: exercising never beats waiting.
inline ModelSpec empty_region_spec() {
    ModelSpec s;
    s.kind = ModelKind::Gbm;
    s.strike = 100.0;
    s.maturity = 1.0;
    s.valuation_time = 0.0;
    s.r = ParamCurve::constant(-0.02);
    s.q = ParamCurve::constant(-0.01);
    s.sigma = ParamCurve::constant(0.3);
    return s;
}

inline bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace exbound::testutil
