#pragma once

#include "exbound/curves.hpp"
#include "exbound/solver.hpp"

// Lognormal model with deterministic time-dependent rate, carry and
// volatility curves: closed-form transition moments feed the generic
// boundary solver and the premium assembly.
namespace exbound {

// Normalized log-moneyness pair of the lognormal bridge from (t, x) to
// level y at time u:
//   d_pm = [log(y/x) - I(r - q +/- sigma^2/2)] / sqrt(I(sigma^2)),
// with I(.) the time integral over [t, u].  Requires x, y > 0 and u > t.
void gbm_d_pm(const ModelSpec& spec, double x, double y, double t, double u,
              double& d_plus, double& d_minus);

// European put/call on the rate/carry/vol curves; at t >= maturity the
// intrinsic value is returned.
double european_put_gbm(const ModelSpec& spec, double t, double x);
double european_call_gbm(const ModelSpec& spec, double t, double x);

// Growth-normalized truncated moments of the lognormal transition density
// at level b seen from (t, x):
//   psi1 = P(X_u <= b)                 = Phi(d_minus(x, b))
//   psi2 = E[X_u 1{X_u <= b}] / x      = (Dq/D) Phi(d_plus(x, b))
void psi1_psi2(const ModelSpec& spec, double t, double x, double u, double b,
               double& psi1, double& psi2);

class GbmBackend final : public EepBackend {
  public:
    explicit GbmBackend(ModelSpec spec);

    const ModelSpec& spec() const override { return spec_; }
    double eff_r(double u) const override { return spec_.r(u); }
    double eff_q(double u) const override { return spec_.q(u); }
    double discount(double t, double u) const override {
        return spec_.discount(t, u);
    }
    double european(double t, double x) const override {
        return european_put_gbm(spec_, t, x);
    }
    // Raw truncated moments: (P(X_u <= b), E[X_u 1{X_u <= b}]).
    void functionals(double t, double x, double u, double b, double& psi1,
                     double& psi2) const override;
    // Complementary moments over [b, infinity).
    void functionals_upper(double t, double x, double u, double b,
                           double& psi1, double& psi2) const override;

  private:
    ModelSpec spec_;
};

// Pricing wrappers against a solved boundary.
PricingResult american_put_gbm(const ModelSpec& spec,
                               const ExerciseBoundary& boundary, double t,
                               double x);
PricingResult american_call_gbm(const ModelSpec& spec,
                                const ExerciseBoundary& boundary, double t,
                                double x);

}  // namespace exbound
