#pragma once

#include <vector>

#include "exbound/curves.hpp"

// Independent verification route: Crank-Nicolson obstacle solver for the
// put pricing PDE, kept deliberately separate from the integral-equation
// machinery.  Lognormal dynamics are discretized in log-spot, the
// mean-reverting model in the raw state on [0, x_max] with the
// strike-forward rebate condition at zero.
namespace exbound {

struct FdOptions {
    int n_space = 1700;
    int n_time = 1700;
    // implicit-Euler startup steps damping the payoff kink
    int rannacher_steps = 2;
    // lognormal grid half-width in log-spot; 0 picks it from the total
    // volatility and carry of the curve set
    double log_half_width = 0.0;
    // mean-reverting grid top; 0 picks it from theta/sigma/kappa
    double x_max = 0.0;
    int max_policy_sweeps = 200;
};

struct FdSolution {
    bool log_space = false;  // grid holds log-spot when true
    double t0 = 0.0;
    double maturity = 0.0;
    std::vector<double> grid;    // uniform spatial nodes
    std::vector<double> values;  // solution at the valuation time
    // Exercise-region edges per time level (spot units; quiet NaN when the
    // contact set at that level is empty).  Filled by obstacle solves only.
    std::vector<double> times;
    std::vector<double> contact_upper;
    std::vector<double> contact_lower;

    // Four-point Lagrange interpolation of the valuation-time values at a
    // spot-units query.
    double value_at(double spot) const;
    double cell_width() const { return grid[1] - grid[0]; }
};

FdSolution fd_put_gbm(const ModelSpec& spec, bool american,
                      const FdOptions& opt = {});
FdSolution fd_put_ou(const ModelSpec& spec, bool american,
                     const FdOptions& opt = {});

// Three solves at (n/4, n/2, n) of both space and time resolution.
// ratio = (coarse - medium) / (medium - fine); a second-order scheme gives
// ratio near 4.  extrapolated removes the leading error from the fine pair.
struct RichardsonResult {
    double coarse = 0.0;
    double medium = 0.0;
    double fine = 0.0;
    double extrapolated = 0.0;
    double ratio = 0.0;
};

RichardsonResult fd_richardson(const ModelSpec& spec, double x, bool american,
                               const FdOptions& finest = {});

}  // namespace exbound
