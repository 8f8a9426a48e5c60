#pragma once

#include <span>
#include <vector>

#include "exbound/boundary.hpp"
#include "exbound/curves.hpp"
#include "exbound/regime.hpp"

// Nonlinear Volterra solver for the exercise boundaries.  The solver is
// model-agnostic: everything model-specific (effective rates, discounting,
// the European leg and the truncated density moments) comes in through
// EepBackend, so the lognormal and mean-reverting branches share one
// backward continuation engine.
namespace exbound {

// Truncated transition-density moments seen from (t, x):
//   psi1(b) = integral of the density over (0, b],
//   psi2(b) = integral of X times the density over (0, b].
class EepBackend {
  public:
    virtual ~EepBackend() = default;

    virtual const ModelSpec& spec() const = 0;
    // Rates entering the exercise gain H(u, X) = eff_r(u) K - eff_q(u) X.
    virtual double eff_r(double u) const = 0;
    virtual double eff_q(double u) const = 0;
    // Discounting always uses the true short rate.
    virtual double discount(double t, double u) const = 0;
    virtual double european(double t, double x) const = 0;
    virtual void functionals(double t, double x, double u, double b,
                             double& psi1, double& psi2) const = 0;
    // Complementary moments over [b, infinity); needed by the call branch.
    virtual void functionals_upper(double t, double x, double u, double b,
                                   double& psi1, double& psi2) const;
};

struct SolverOptions {
    int n_nodes = 200;
    // |F| threshold (relative to K) at which root iterations stop.
    double root_ftol_rel = 1e-12;
    // |F| threshold (relative to K) below which a node counts as converged.
    double converge_tol_rel = 1e-8;
    // "very small" boundary value threshold, relative to K.
    double small_eps_rel = 1e-6;
    // gap threshold for collapse/reappearance events, relative to K.
    double gap_eps_rel = 1e-4;
    int max_iter = 80;
    // Lower clamp on u - t inside the quadrature endpoint.
    double endpoint_guard = 1e-12;
};

// Early-exercise premium evaluated against a solved (or partially solved)
// boundary by composite trapezoid over the node grid restricted to
// [t, maturity].  With sort_labels the per-node exercise interval is
// (min, max) of the stored values (pricing mode: a crossed pair never
// integrates with a negative gap); without it the raw labels are used
// (value-matching mode, the convention the equations are written in).
double eep_premium(const EepBackend& backend,
                   std::span<const BoundaryNode> nodes, double t, double x,
                   bool sort_labels, double endpoint_guard = 1e-12);

// Residual of the put value-matching condition at (t, b):
//   F = K - b - European(t, b) - premium(t, b).
double value_matching_residual(const EepBackend& backend,
                               std::span<const BoundaryNode> nodes, double t,
                               double b, double endpoint_guard = 1e-12);

struct BoundarySolution {
    ExerciseBoundary boundary;
    SolveReport report;
};

// Backward continuation over the graded grid.  Per node the regime
// classification of the effective rates picks the system: empty sections
// are fixed to no-exercise, two-boundary sections use the three-step
// coupled procedure, and one-boundary sections keep the coupled system as
// long as the warm-started lower boundary is still alive (boundaries decay
// to zero over a finite span rather than vanishing at the regime switch).
BoundarySolution solve_boundary(const EepBackend& backend,
                                const SolverOptions& opt = {});

// American call with a single upper boundary (exercise region above the
// boundary).  Supported only while eff_q >= 0 on [t0, T] with eff_q not
// identically zero handled as: eff_q == 0 everywhere => empty boundary.
// Throws std::runtime_error outside the supported regime.
BoundarySolution solve_call_boundary(const EepBackend& backend,
                                     const SolverOptions& opt = {});

// Premium of the call against an upper-boundary solution.
double eep_premium_call(const EepBackend& backend,
                        std::span<const BoundaryNode> nodes, double t,
                        double x, double endpoint_guard = 1e-12);

struct PricingResult {
    double european = 0.0;
    double eep = 0.0;
    double american = 0.0;
    double max_vm_residual = 0.0;   // max node residual of the boundary used
    double min_integrand = 0.0;     // smallest EEP slice seen while pricing
    bool eep_nonnegative = true;    // eep >= -1e-8 * K
};

// Assemble the put price at (t, x): European leg plus the premium with
// sorted labels, with diagnostics (largest boundary-node residual over
// [t, T], smallest premium slice seen).  At t >= maturity the intrinsic
// value is returned.
PricingResult price_put(const EepBackend& backend,
                        const ExerciseBoundary& boundary, double t, double x,
                        double endpoint_guard = 1e-12);

// Step-3 seed of the coupled solve (pure helper, exposed for testing):
// alpha = beta = 1 when either scalar-pass value is below small_eps, else
// (1.05, 0.95) when upper > lower and (0.95, 1.05) otherwise.
void step3_initial_guess(double upper1, double lower1, double small_eps,
                         double& seed_upper, double& seed_lower);

}  // namespace exbound
