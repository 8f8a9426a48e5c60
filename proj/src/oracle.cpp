#include "exbound/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "exbound/num.hpp"

namespace exbound {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// Terminal put data with the kink cell replaced by its exact cell average,
// so the projection error stays O(h^2) wherever the kink lands relative to
// the nodes (and stays there under grid halving).

// log-spot grid: average of (K - e^y)+ over each cell
std::vector<double> terminal_put_log(const std::vector<double>& grid,
                                     double K) {
    const double h = grid[1] - grid[0];
    const double c = std::log(K);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a = grid[i] - 0.5 * h;
        const double b = grid[i] + 0.5 * h;
        if (b <= c) {
            v[i] = K - (std::exp(b) - std::exp(a)) / h;
        } else if (a >= c) {
            v[i] = 0.0;
        } else {
            v[i] = (K * (c - a) - (K - std::exp(a))) / h;
        }
    }
    return v;
}

// raw grid: average of (K - x)+ over each cell
std::vector<double> terminal_put_raw(const std::vector<double>& grid,
                                     double K) {
    const double h = grid[1] - grid[0];
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a = grid[i] - 0.5 * h;
        const double b = grid[i] + 0.5 * h;
        if (b <= K) {
            v[i] = K - grid[i];
        } else if (a >= K) {
            v[i] = 0.0;
        } else {
            v[i] = 0.5 * (K - a) * (K - a) / h;
        }
    }
    return v;
}

struct StepWork {
    std::vector<double> lower, diag, upper, rhs;      // PDE rows
    std::vector<double> slower, sdiag, supper, srhs;  // stamped copy
};

// One theta step t_next -> t_now.  `coeff(t, i)` returns (a, b) of
// a V_xx + b V_x - kill(t) V at interior node i.  Dirichlet values are
// prescribed at both ends.  With `obstacle` non-null the step solves the
// discrete complementarity problem by policy iteration on the active set.
template <class CoeffFn, class KillFn>
void theta_step(std::vector<double>& v, const std::vector<double>& grid,
                double t_now, double t_next, double theta, CoeffFn&& coeff,
                KillFn&& kill, double bc_lo_now, double bc_hi_now,
                const std::vector<double>* obstacle,
                std::vector<char>& active, int max_sweeps, double K,
                StepWork& w) {
    const int m = static_cast<int>(grid.size()) - 1;
    const double h = grid[1] - grid[0];
    const double dt = t_next - t_now;
    const double t_eval = t_next - theta * dt;
    const double r_kill = kill(t_eval);

    w.lower.assign(m + 1, 0.0);
    w.diag.assign(m + 1, 1.0);
    w.upper.assign(m + 1, 0.0);
    w.rhs.assign(m + 1, 0.0);

    for (int i = 1; i < m; ++i) {
        double a = 0.0, b = 0.0;
        coeff(t_eval, grid[i], a, b);
        const double al = a / (h * h);
        const double be = b / (2.0 * h);
        const double lo_c = al - be;
        const double mid_c = -2.0 * al - r_kill;
        const double hi_c = al + be;
        // implicit side
        w.lower[i] = -theta * dt * lo_c;
        w.diag[i] = 1.0 - theta * dt * mid_c;
        w.upper[i] = -theta * dt * hi_c;
        // explicit side
        const double expl = (1.0 - theta) * dt;
        w.rhs[i] = v[i] + expl * (lo_c * v[i - 1] + mid_c * v[i] +
                                  hi_c * v[i + 1]);
    }
    // Fold the Dirichlet rows into the first/last interior equations.
    w.rhs[0] = bc_lo_now;
    w.rhs[m] = bc_hi_now;
    w.rhs[1] -= w.lower[1] * bc_lo_now;
    w.rhs[m - 1] -= w.upper[m - 1] * bc_hi_now;
    w.lower[1] = 0.0;
    w.upper[m - 1] = 0.0;

    if (obstacle == nullptr) {
        auto sol = num::tridiag_solve(w.lower, w.diag, w.upper, w.rhs);
        v = std::move(sol);
        v[0] = bc_lo_now;
        v[m] = bc_hi_now;
        return;
    }

    const std::vector<double>& psi = *obstacle;
    const double lift_tol = 1e-14 * K;
    const double res_tol = 1e-12 * K;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        w.slower = w.lower;
        w.sdiag = w.diag;
        w.supper = w.upper;
        w.srhs = w.rhs;
        for (int i = 1; i < m; ++i) {
            if (active[i]) {
                w.slower[i] = 0.0;
                w.sdiag[i] = 1.0;
                w.supper[i] = 0.0;
                w.srhs[i] = psi[i];
            }
        }
        auto sol = num::tridiag_solve(w.slower, w.sdiag, w.supper, w.srhs);
        bool changed = false;
        for (int i = 1; i < m; ++i) {
            if (!active[i]) {
                if (sol[i] < psi[i] - lift_tol) {
                    active[i] = 1;
                    changed = true;
                }
            } else {
                // complementarity: the PDE row residual must be >= 0 on the
                // exercised set, otherwise holding dominates and the node
                // is released (rows are boundary-folded, so sol[0]/sol[m]
                // never enter)
                const double row = w.lower[i] * sol[i - 1] +
                                   w.diag[i] * sol[i] +
                                   w.upper[i] * sol[i + 1];
                if (row - w.rhs[i] < -res_tol) {
                    active[i] = 0;
                    changed = true;
                }
            }
        }
        v = std::move(sol);
        v[0] = bc_lo_now;
        v[m] = bc_hi_now;
        if (!changed) break;
    }
}

struct BcTables {
    // prefix integrals of r and q on the time grid, anchored at t0
    std::vector<double> big_r, big_q;
};

BcTables bc_tables(const ModelSpec& spec, const std::vector<double>& times) {
    BcTables t;
    const std::size_t n = times.size();
    t.big_r.resize(n);
    t.big_q.resize(n);
    t.big_r[0] = 0.0;
    t.big_q[0] = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        t.big_r[j] = t.big_r[j - 1] + spec.r.integral(times[j - 1], times[j]);
        t.big_q[j] = t.big_q[j - 1] + spec.q.integral(times[j - 1], times[j]);
    }
    return t;
}

// Deep-in-the-money asymptote of the lognormal put at spot x_lo: the best
// value over commitments to exercise at a fixed future time (covers both
// the usual immediate-exercise case and negative-rate regimes where waiting
// at a frozen spot is better).
double deep_itm_put(const BcTables& bc, std::size_t j, double K, double x_lo,
                    bool american, std::size_t n_levels) {
    const double erj = std::exp(bc.big_r[j]);
    const double eqj = std::exp(bc.big_q[j]);
    if (!american) {
        const std::size_t last = n_levels - 1;
        return K * erj * std::exp(-bc.big_r[last]) -
               x_lo * eqj * std::exp(-bc.big_q[last]);
    }
    double best = K - x_lo;
    for (std::size_t k = j; k < n_levels; ++k) {
        const double val = K * erj * std::exp(-bc.big_r[k]) -
                           x_lo * eqj * std::exp(-bc.big_q[k]);
        best = std::max(best, val);
    }
    return best;
}

void record_contacts(FdSolution& out, std::size_t level,
                     const std::vector<char>& active,
                     const std::vector<double>& grid, bool log_space) {
    double up = nan_v, lo = nan_v;
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i]) {
            const double s = log_space ? std::exp(grid[i]) : grid[i];
            if (std::isnan(lo)) lo = s;
            up = s;
        }
    }
    out.contact_upper[level] = up;
    out.contact_lower[level] = lo;
}

}  // namespace

double FdSolution::value_at(double spot) const {
    const double xq = log_space ? std::log(spot) : spot;
    const double h = cell_width();
    const int m = static_cast<int>(grid.size()) - 1;
    if (xq < grid.front() || xq > grid.back()) {
        throw std::invalid_argument("fd query outside the grid");
    }
    int i = static_cast<int>((xq - grid.front()) / h);
    i = std::clamp(i - 1, 0, m - 3);  // 4-point window [i, i+3]
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b) {
            if (a == b) continue;
            w *= (xq - grid[i + b]) / (grid[i + a] - grid[i + b]);
        }
        acc += w * values[i + a];
    }
    return acc;
}

FdSolution fd_put_gbm(const ModelSpec& spec, bool american,
                      const FdOptions& opt) {
    spec.validate();
    if (spec.kind != ModelKind::Gbm) {
        throw std::invalid_argument("fd_put_gbm: model kind mismatch");
    }
    const double K = spec.strike;
    const double t0 = spec.valuation_time;
    const double T = spec.maturity;

    double half = opt.log_half_width;
    if (half <= 0.0) {
        const double sd_tot = std::sqrt(spec.total_var(t0, T));
        const double carry = std::abs(spec.r.integral(t0, T)) +
                             std::abs(spec.q.integral(t0, T));
        half = 7.5 * sd_tot + carry + 0.5;
    }
    const int m = opt.n_space;
    const double y_lo = std::log(K) - half;
    const double y_hi = std::log(K) + half;

    FdSolution out;
    out.log_space = true;
    out.t0 = t0;
    out.maturity = T;
    out.grid.resize(m + 1);
    for (int i = 0; i <= m; ++i) {
        out.grid[i] = y_lo + (y_hi - y_lo) * i / m;
    }
    out.times.resize(opt.n_time + 1);
    for (int j = 0; j <= opt.n_time; ++j) {
        out.times[j] = t0 + (T - t0) * j / opt.n_time;
    }
    out.contact_upper.assign(out.times.size(), nan_v);
    out.contact_lower.assign(out.times.size(), nan_v);

    std::vector<double> v = terminal_put_log(out.grid, K);
    std::vector<double> psi(m + 1);
    for (int i = 0; i <= m; ++i) {
        psi[i] = std::max(K - std::exp(out.grid[i]), 0.0);
    }
    const BcTables bc = bc_tables(spec, out.times);
    const double x_lo = std::exp(y_lo);

    std::vector<char> active(m + 1, 0);
    StepWork work;
    auto coeff = [&](double t, double y, double& a, double& b) {
        (void)y;
        const double s2 = spec.sigma(t) * spec.sigma(t);
        a = 0.5 * s2;
        b = spec.r(t) - spec.q(t) - 0.5 * s2;
    };
    auto kill = [&](double t) { return spec.r(t); };

    for (int j = opt.n_time - 1; j >= 0; --j) {
        const double theta =
            (opt.n_time - 1 - j) < opt.rannacher_steps ? 1.0 : 0.5;
        const double bc_lo =
            deep_itm_put(bc, j, K, x_lo, american, out.times.size());
        theta_step(v, out.grid, out.times[j], out.times[j + 1], theta, coeff,
                   kill, bc_lo, 0.0, american ? &psi : nullptr, active,
                   opt.max_policy_sweeps, K, work);
        if (american) {
            record_contacts(out, j, active, out.grid, /*log_space=*/true);
        }
    }
    out.values = std::move(v);
    return out;
}

FdSolution fd_put_ou(const ModelSpec& spec, bool american,
                     const FdOptions& opt) {
    spec.validate();
    if (spec.kind != ModelKind::Ou) {
        throw std::invalid_argument("fd_put_ou: model kind mismatch");
    }
    const double K = spec.strike;
    const double t0 = spec.valuation_time;
    const double T = spec.maturity;

    double x_max = opt.x_max;
    if (x_max <= 0.0) {
        double th_max = 0.0, sg_max = 0.0, kp_min = 1e300;
        const int probe = 128;
        for (int i = 0; i <= probe; ++i) {
            const double t = t0 + (T - t0) * i / probe;
            th_max = std::max(th_max, std::abs(spec.theta(t)));
            sg_max = std::max(sg_max, spec.sigma(t));
            kp_min = std::min(kp_min, spec.kappa(t));
        }
        const double sd = kp_min > 0.25
                              ? sg_max / std::sqrt(2.0 * kp_min)
                              : sg_max * std::sqrt(T - t0);
        x_max = std::max(2.5 * K, th_max + 8.0 * sd);
    }

    const int m = opt.n_space;
    FdSolution out;
    out.log_space = false;
    out.t0 = t0;
    out.maturity = T;
    out.grid.resize(m + 1);
    for (int i = 0; i <= m; ++i) out.grid[i] = x_max * i / m;
    out.times.resize(opt.n_time + 1);
    for (int j = 0; j <= opt.n_time; ++j) {
        out.times[j] = t0 + (T - t0) * j / opt.n_time;
    }
    out.contact_upper.assign(out.times.size(), nan_v);
    out.contact_lower.assign(out.times.size(), nan_v);

    std::vector<double> v = terminal_put_raw(out.grid, K);
    std::vector<double> psi(m + 1);
    for (int i = 0; i <= m; ++i) psi[i] = std::max(K - out.grid[i], 0.0);

    const BcTables bc = bc_tables(spec, out.times);
    std::vector<char> active(m + 1, 0);
    StepWork work;
    auto coeff = [&](double t, double x, double& a, double& b) {
        a = 0.5 * spec.sigma(t) * spec.sigma(t);
        b = spec.kappa(t) * (spec.theta(t) - x);
    };
    auto kill = [&](double t) { return spec.r(t); };

    for (int j = opt.n_time - 1; j >= 0; --j) {
        const double theta =
            (opt.n_time - 1 - j) < opt.rannacher_steps ? 1.0 : 0.5;
        // at zero the claim converts to the strike carried at the short
        // rate; an American holder keeps the better of that and the payoff
        double bc_lo = K * std::exp(bc.big_r[j]);
        if (american) bc_lo = std::max(bc_lo, K);
        theta_step(v, out.grid, out.times[j], out.times[j + 1], theta, coeff,
                   kill, bc_lo, 0.0, american ? &psi : nullptr, active,
                   opt.max_policy_sweeps, K, work);
        if (american) {
            record_contacts(out, j, active, out.grid, /*log_space=*/false);
        }
    }
    out.values = std::move(v);
    return out;
}

RichardsonResult fd_richardson(const ModelSpec& spec, double x, bool american,
                               const FdOptions& finest) {
    auto run = [&](int div) {
        FdOptions o = finest;
        o.n_space = finest.n_space / div;
        o.n_time = finest.n_time / div;
        const FdSolution s = spec.kind == ModelKind::Gbm
                                 ? fd_put_gbm(spec, american, o)
                                 : fd_put_ou(spec, american, o);
        return s.value_at(x);
    };
    RichardsonResult rr;
    rr.coarse = run(4);
    rr.medium = run(2);
    rr.fine = run(1);
    rr.extrapolated = rr.fine + (rr.fine - rr.medium) / 3.0;
    rr.ratio = (rr.coarse - rr.medium) / (rr.medium - rr.fine);
    return rr;
}

}  // namespace exbound
