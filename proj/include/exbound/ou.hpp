#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "exbound/boundary.hpp"
#include "exbound/curves.hpp"
#include "exbound/solver.hpp"

// Mean-reverting (Ornstein-Uhlenbeck) branch: the change of variables that
// maps the pricing problem onto the heat equation on a half line, the
// boundary-gradient Volterra solve, the European leg assembled from the
// image-kernel Green identity, truncated density moments for the premium,
// and the digital-option static-hedge decomposition of the premium.
namespace exbound {

// Rates entering the exercise gain H(u, X) = r_eff K - q_eff X for the
// mean-reverting dynamics dX = kappa (theta - X) dt + sigma dW:
//   r_eff = r + kappa theta / K,   q_eff = r + kappa.
void effective_rates(const ModelSpec& spec, double u, double& r_eff,
                     double& q_eff);

// Deterministic change of variables (t, x) -> (tau, z):
//   gamma(t) = exp(-int_t^T kappa),          alpha(t) = -gamma(t),
//   tau(t)   = phi(t) = 1/2 int_t^T sigma^2 gamma^2,
//   z(t, x)  = x gamma(t) + y(t),  y(t) = int_t^T gamma (kappa theta - gamma sigma^2),
//   beta(t)  = -int_t^T [r + 1/2 gamma (2 kappa theta - gamma sigma^2)],
// under which P(t, x) = exp(beta + alpha x) v(tau, z) with v_tau = v_zz on
// the half line z > y(t).  All integrals are cached per-panel suffix sums
// (Gauss-Legendre panels), with a direct panel-walk for differences so that
// y(t1) - y(t2) never cancels catastrophically.
class HeatTransform {
  public:
    explicit HeatTransform(const ModelSpec& spec, int panels = 1024);

    const ModelSpec& spec() const { return spec_; }

    double gamma(double t) const;
    double alpha(double t) const { return -gamma(t); }
    double phi(double t) const;
    double y(double t) const;
    double beta(double t) const;
    double tau_max() const { return tau_max_; }

    // Inverse of the clock tau = phi(t) (monotone decreasing); tau outside
    // [0, tau_max] clamps to the corresponding end.
    double t_of_tau(double tau) const;

    double z_of(double t, double x) const { return x * gamma(t) + y(t); }
    double x_of(double t, double z) const { return (z - y(t)) / gamma(t); }

    // y(t_early) - y(t_late) as a direct integral over [t_early, t_late].
    double y_between(double t_early, double t_late) const;
    // phi(t_early) - phi(t_late), same panel-walk protection.
    double phi_between(double t_early, double t_late) const;

    // Boundary data of the transformed problem (the x = 0 rebate K / D(t0, t)
    // seen through the change of variables) and its clock derivative source:
    //   g(tau(t)) = exp(-beta(t)) K / D(t0, t),   lambda = -dg/dtau.
    double g_of(double t) const;
    double g_terminal() const { return g_terminal_; }
    double lambda_of(double t) const;

  private:
    struct SuffixTable {
        double a = 0.0, b = 0.0, h = 0.0;
        std::vector<double> panel;   // per-panel integrals
        std::vector<double> suffix;  // suffix[i] = sum of panels i..end
    };

    double suffix_eval(const SuffixTable& tab, int which, double t) const;
    double between_eval(const SuffixTable& tab, int which, double t1,
                        double t2) const;
    double integrand(int which, double s) const;

    ModelSpec spec_;
    double t0_ = 0.0, T_ = 0.0;
    double tau_max_ = 0.0;
    double g_terminal_ = 0.0;
    SuffixTable phi_tab_, y_tab_, beta_tab_;
    std::vector<double> inv_t_, inv_tau_;  // dense table for t_of_tau
};

// Heat kernel on the half line z > y_tau with an absorbing image charge:
//   G(z, xi, tau) = Gamma(z - xi, tau) - Gamma(z + xi - 2 y_tau, tau),
//   Gamma(d, h) = exp(-d^2 / 4h) / (2 sqrt(pi h)).
// Throws std::invalid_argument when tau <= 0.
double greens_heat(double z, double xi, double tau, double y_tau);

// Boundary gradient Psi(tau) = v_z(tau, z -> B(tau)) of the transformed
// European problem, collocated on a graded clock grid.  Depends on model
// data only (not on the spot), so it is solved once per model.
struct GradientProfile {
    std::vector<double> tau;  // ascending, tau.front() == 0
    std::vector<double> psi;
    double max_residual = 0.0;  // collocation defect after the solve

    double value_at(double tau_q) const;
};

struct GradientOptions {
    int n_nodes = 160;      // collocation nodes (graded quadratically)
    int w_panels = 64;      // uniform quadrature panels per row
    int graded_panels = 12; // extra panels packed toward the short-time end
    bool zero_data = false; // test hook: drop payoff and boundary sources
};

// Lower-triangular collocation of the second-kind Volterra equation
//   Psi(tau) = R(tau) + int_0^tau Psi(s) K(tau, s) ds,
// where R collects the payoff convolution derivative and the boundary-data
// sources, and K is the image-pair layer kernel.  The integrable
// 1/sqrt(tau-s) endpoint singularity is removed exactly by the substitution
// w = sqrt(tau - s) before quadrature.  With zero_data the right-hand side
// vanishes and the solve must return Psi identically zero.
GradientProfile solve_gradient(const HeatTransform& transform,
                               const GradientOptions& opt = {});

// Shared immutable pricing context for one mean-reverting model: the
// transform, the boundary-gradient profile and memoized per-time values.
// All pricing entry points are const and internally synchronized.
class OuModel {
  public:
    explicit OuModel(const ModelSpec& spec, int panels = 1024,
                     const GradientOptions& gopt = {});

    const ModelSpec& spec() const { return spec_; }
    const HeatTransform& transform() const { return transform_; }
    const GradientProfile& gradient() const { return gradient_; }

    // European put with an absorbing rebate of K / D(t0, t) at x = 0,
    // assembled from the Green identity of the transformed problem:
    //   v = [payoff convolution] + [boundary-data group in closed erf form]
    //       + [gradient layer by graded quadrature],
    //   P = exp(beta + alpha x) v.
    // Throws std::invalid_argument when x < 0; t >= maturity returns the
    // payoff.
    double european_put(double t, double x) const;

    // Truncated moments over w in (0, b] of the absorbed transition density
    //   psi(w; t, x, u) = gamma(u) [ N(zeta; m1, v) - e^{-2 x gamma(t)} N(zeta; m2, v) ],
    //   zeta = w gamma(u) + y(u), v = 2 (phi(t) - phi(u)),
    //   m1 = z(t,x) + v,  m2 = 2 y(t) - z(t,x) + v,
    // i.e. the free Gaussian law of the transformed coordinate (with the
    // variance drift shift), minus the weighted charge reflected about the
    // observation-time image of x = 0.
    void density_functionals(double t, double x, double u, double b,
                             double& psi1, double& psi2) const;

  private:
    struct PairCache {
        double var = 0.0;      // 2 (phi(t) - phi(u))
        double y_gap = 0.0;    // y(t) - y(u), panel-walk integral
        double gamma_u = 0.0;
    };
    struct EvalContext;  // per-observation-time quadrature data

    const PairCache& pair_cache(double t, double u) const;
    std::shared_ptr<const EvalContext> context(double t) const;

    ModelSpec spec_;
    HeatTransform transform_;
    GradientProfile gradient_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<double, double>, PairCache> pairs_;
    mutable std::map<double, std::shared_ptr<const EvalContext>> contexts_;
};

// Adapter plugging the mean-reverting model into the generic boundary
// solver and premium assembly.
class OuBackend final : public EepBackend {
  public:
    explicit OuBackend(std::shared_ptr<const OuModel> model)
        : model_(std::move(model)) {}

    const ModelSpec& spec() const override { return model_->spec(); }
    double eff_r(double u) const override;
    double eff_q(double u) const override;
    double discount(double t, double u) const override {
        return model_->spec().discount(t, u);
    }
    double european(double t, double x) const override {
        return model_->european_put(t, x);
    }
    void functionals(double t, double x, double u, double b, double& psi1,
                     double& psi2) const override {
        model_->density_functionals(t, x, u, b, psi1, psi2);
    }

    const OuModel& model() const { return *model_; }

  private:
    std::shared_ptr<const OuModel> model_;
};

// Boundary solve and pricing entry points for the mean-reverting put.
BoundarySolution solve_boundary_ou(std::shared_ptr<const OuModel> model,
                                   const SolverOptions& opt = {});
PricingResult american_put_ou(std::shared_ptr<const OuModel> model,
                              const ExerciseBoundary& boundary, double t,
                              double x);

// Static-hedge decomposition of the early-exercise premium: per maturity
// slice the premium integrand is a cash-or-nothing minus asset-or-nothing
// digital pair struck at the boundary,
//   EEP = int_t^T D(t,u) [ r_eff(u) P_CON(u) - q_eff(u) P_AON(u) ] du,
//   P_CON = K psi1(X*(u)),  P_AON = psi2(X*(u)),
// integrated by per-slice Simpson on a uniform maturity ladder (a second
// quadrature route, deliberately different from the premium trapezoid).
// Slice integrals are additive: extending the ladder reuses every computed
// slice unchanged.
struct HedgeSlice {
    double u = 0.0;        // right edge of the slice
    double x_upper = 0.0;  // boundary (upper edge of the exercise set) at u
    double p_con = 0.0;    // cash digital leg at the right edge
    double p_aon = 0.0;    // asset digital leg at the right edge
    double contribution = 0.0;  // integral of the premium over the slice
};

struct HedgeDecomposition {
    double t = 0.0;
    double x = 0.0;
    std::vector<HedgeSlice> slices;  // ascending, covering [t, T]

    double premium() const;
    // Premium of the ladder truncated after n slices (maturity t + n h).
    double premium_through(std::size_t n) const;
};

HedgeDecomposition static_hedge_eep(const OuModel& model,
                                    const ExerciseBoundary& boundary, double t,
                                    double x, int n_slices = 1024);

}  // namespace exbound
