#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

// Deterministic parameter curves and the model description they feed.
// Both supported curve shapes admit closed-form integrals, which the
// pricing layers rely on; quadrature is reserved for genuinely
// non-integrable combinations (see the mean-reverting transform).
namespace exbound {

class ParamCurve {
  public:
    enum class Kind { Constant, ExpAffine };

    ParamCurve() : kind_(Kind::Constant), a_(0.0), b_(0.0), c_(0.0) {}

    static ParamCurve constant(double value) {
        ParamCurve g;
        g.kind_ = Kind::Constant;
        g.a_ = value;
        return g;
    }

    // value(t) = a * exp(-b * t) + c
    static ParamCurve exp_affine(double a, double b, double c) {
        ParamCurve g;
        g.kind_ = Kind::ExpAffine;
        g.a_ = a;
        g.b_ = b;
        g.c_ = c;
        return g;
    }

    Kind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }

    double operator()(double t) const {
        if (kind_ == Kind::Constant) return a_;
        return a_ * std::exp(-b_ * t) + c_;
    }

    // Closed form of the integral over [t, u] (signed: u < t is allowed
    // and yields the negative of the integral over [u, t]).
    double integral(double t, double u) const {
        if (kind_ == Kind::Constant) return a_ * (u - t);
        if (std::abs(b_) < 1e-12) return (a_ + c_) * (u - t);
        return a_ / b_ * (std::exp(-b_ * t) - std::exp(-b_ * u)) +
               c_ * (u - t);
    }

    // Closed form of the integral of value(s)^2 over [t, u].
    double square_integral(double t, double u) const {
        if (kind_ == Kind::Constant) return a_ * a_ * (u - t);
        if (std::abs(b_) < 1e-12) {
            const double v = a_ + c_;
            return v * v * (u - t);
        }
        const double quad =
            a_ * a_ / (2.0 * b_) * (std::exp(-2.0 * b_ * t) - std::exp(-2.0 * b_ * u));
        const double cross =
            2.0 * a_ * c_ / b_ * (std::exp(-b_ * t) - std::exp(-b_ * u));
        return quad + cross + c_ * c_ * (u - t);
    }

    std::string describe() const;

  private:
    Kind kind_;
    double a_, b_, c_;
};

enum class ModelKind { Gbm, Ou };

// Full description of one pricing problem: payoff data plus the
// deterministic curves of the underlying dynamics.  The mean-reversion
// curves (kappa, theta) are ignored for the lognormal model.
struct ModelSpec {
    ModelKind kind = ModelKind::Gbm;
    double strike = 0.0;
    double maturity = 0.0;
    double valuation_time = 0.0;
    ParamCurve r;
    ParamCurve q;
    ParamCurve sigma;
    ParamCurve kappa;
    ParamCurve theta;

    // Throws std::invalid_argument on an unusable description.
    void validate() const;

    double discount(double t, double u) const {
        return std::exp(-r.integral(t, u));
    }
    double dividend_discount(double t, double u) const {
        return std::exp(-q.integral(t, u));
    }
    // Integrated variance of the lognormal volatility over [t, u].
    double total_var(double t, double u) const {
        return sigma.square_integral(t, u);
    }
};

}  // namespace exbound
