#include "exbound/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "exbound/num.hpp"

namespace exbound {

void gbm_d_pm(const ModelSpec& spec, double x, double y, double t, double u,
              double& d_plus, double& d_minus) {
    if (x <= 0.0 || y <= 0.0) {
        throw std::invalid_argument("gbm_d_pm: spot and level must be > 0");
    }
    if (!(u > t)) {
        throw std::invalid_argument("gbm_d_pm: needs u > t");
    }
    const double var = spec.total_var(t, u);
    if (var <= 0.0) {
        throw std::invalid_argument("gbm_d_pm: vanishing variance on [t, u]");
    }
    const double sd = std::sqrt(var);
    const double carry = spec.r.integral(t, u) - spec.q.integral(t, u);
    const double lm = std::log(y / x);
    d_plus = (lm - carry - 0.5 * var) / sd;
    d_minus = (lm - carry + 0.5 * var) / sd;
}

double european_put_gbm(const ModelSpec& spec, double t, double x) {
    const double K = spec.strike;
    const double T = spec.maturity;
    if (t >= T) return std::max(K - x, 0.0);
    if (x <= 0.0) return K * spec.discount(t, T);
    double dp = 0.0, dm = 0.0;
    gbm_d_pm(spec, x, K, t, T, dp, dm);
    return K * spec.discount(t, T) * num::norm_cdf(dm) -
           x * spec.dividend_discount(t, T) * num::norm_cdf(dp);
}

double european_call_gbm(const ModelSpec& spec, double t, double x) {
    const double K = spec.strike;
    const double T = spec.maturity;
    if (t >= T) return std::max(x - K, 0.0);
    if (x <= 0.0) return 0.0;
    double dp = 0.0, dm = 0.0;
    gbm_d_pm(spec, x, K, t, T, dp, dm);
    return x * spec.dividend_discount(t, T) * num::norm_cdf(-dp) -
           K * spec.discount(t, T) * num::norm_cdf(-dm);
}

void psi1_psi2(const ModelSpec& spec, double t, double x, double u, double b,
               double& psi1, double& psi2) {
    double dp = 0.0, dm = 0.0;
    gbm_d_pm(spec, x, b, t, u, dp, dm);
    psi1 = num::norm_cdf(dm);
    psi2 = spec.dividend_discount(t, u) / spec.discount(t, u) *
           num::norm_cdf(dp);
}

GbmBackend::GbmBackend(ModelSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind != ModelKind::Gbm) {
        throw std::invalid_argument("GbmBackend: model kind mismatch");
    }
    spec_.validate();
}

void GbmBackend::functionals(double t, double x, double u, double b,
                             double& psi1, double& psi2) const {
    double p1 = 0.0, p2 = 0.0;
    psi1_psi2(spec_, t, x, u, b, p1, p2);
    psi1 = p1;
    psi2 = x * p2;
}

void GbmBackend::functionals_upper(double t, double x, double u, double b,
                                   double& psi1, double& psi2) const {
    double dp = 0.0, dm = 0.0;
    gbm_d_pm(spec_, x, b, t, u, dp, dm);
    psi1 = num::norm_cdf(-dm);
    psi2 = x * spec_.dividend_discount(t, u) / spec_.discount(t, u) *
           num::norm_cdf(-dp);
}

PricingResult american_put_gbm(const ModelSpec& spec,
                               const ExerciseBoundary& boundary, double t,
                               double x) {
    GbmBackend be(spec);
    return price_put(be, boundary, t, x);
}

PricingResult american_call_gbm(const ModelSpec& spec,
                                const ExerciseBoundary& boundary, double t,
                                double x) {
    GbmBackend be(spec);
    PricingResult out;
    const double K = spec.strike;
    if (t >= boundary.maturity) {
        out.european = std::max(x - K, 0.0);
        out.american = out.european;
        return out;
    }
    out.european = european_call_gbm(spec, t, x);
    out.eep = eep_premium_call(
        be, {boundary.nodes.data(), boundary.nodes.size()}, t, x);
    out.american = out.european + out.eep;
    for (const auto& nd : boundary.nodes) {
        if (nd.u >= t && nd.state != NodeState::Empty) {
            out.max_vm_residual =
                std::max(out.max_vm_residual, std::abs(nd.residual));
        }
    }
    out.eep_nonnegative = out.eep >= -1e-8 * K;
    return out;
}

}  // namespace exbound
