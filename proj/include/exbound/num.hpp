#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

// Small numerics toolbox shared by every module: normal distribution
// helpers, fixed Gauss-Legendre rules, adaptive Simpson quadrature,
// safeguarded scalar/2x2 root finders and a tridiagonal solve.
namespace exbound::num {

inline constexpr double inv_sqrt2 = 0.70710678118654752440;
inline constexpr double sqrt_two_pi = 2.50662827463100050242;
inline constexpr double sqrt_pi = 1.77245385090551602730;

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / sqrt_two_pi;
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * inv_sqrt2);
}

// log Phi(x), accurate for large negative x where Phi underflows.
inline double log_norm_cdf(double x) {
    if (x > -26.0) {
        return std::log(norm_cdf(x));
    }
    // Asymptotic expansion Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - ...)
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x * sqrt_two_pi) + std::log(series);
}

// exp(a) * Phi(b) without intermediate under/overflow when b is very
// negative or a alone would overflow.
inline double exp_mul_cdf(double a, double b) {
    if (b > -26.0 && a < 600.0) {
        return std::exp(a) * norm_cdf(b);
    }
    return std::exp(a + log_norm_cdf(b));
}

// Density of N(mean, var) evaluated at x.
inline double gauss_density(double x, double mean, double var) {
    const double s = std::sqrt(var);
    const double z = (x - mean) / s;
    return std::exp(-0.5 * z * z) / (s * sqrt_two_pi);
}

// ---------------------------------------------------------------------------
// Fixed Gauss-Legendre rules on [-1, 1].

struct GaussRule {
    std::span<const double> nodes;
    std::span<const double> weights;
};

inline constexpr std::array<double, 4> gl4_nodes = {
    -0.8611363115940526, -0.3399810435848563,
    0.3399810435848563, 0.8611363115940526};
inline constexpr std::array<double, 4> gl4_weights = {
    0.3478548451374538, 0.6521451548625461,
    0.6521451548625461, 0.3478548451374538};

inline constexpr std::array<double, 7> gl7_nodes = {
    -0.9491079123427585, -0.7415311855993945, -0.4058451513773972,
    0.0,
    0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
inline constexpr std::array<double, 7> gl7_weights = {
    0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

inline GaussRule gl4() { return {gl4_nodes, gl4_weights}; }
inline GaussRule gl7() { return {gl7_nodes, gl7_weights}; }

// Integrate f over [a, b] with a single application of the rule.
template <class F>
double gauss_panel(F&& f, double a, double b, const GaussRule& rule) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return acc * half;
}

// Integrate f over [a, b] splitting into n equal panels.
template <class F>
double gauss_panels(F&& f, double a, double b, int n, const GaussRule& rule) {
    double acc = 0.0;
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
        acc += gauss_panel(f, a + i * h, a + (i + 1) * h, rule);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature (oracle-grade; used by tests and by slow
// reference paths, not by the production hot loops).

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-12,
                        int max_depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// ---------------------------------------------------------------------------
// Root finding.

struct RootResult {
    double x = 0.0;
    double f = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
};

// Safeguarded Newton on a bracket [lo, hi] with f(lo), f(hi) of opposite
// sign (or one of them zero).  The derivative is estimated by central
// differences; any step that escapes the bracket or fails to shrink the
// residual falls back to bisection.  Convergence is declared on |f| <= ftol
// or bracket width <= xtol.
template <class F>
RootResult newton_bisect(F&& f, double lo, double hi, double guess,
                         double ftol, double xtol, int max_iter = 100) {
    RootResult out;
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0, true};
    if (fhi == 0.0) return {hi, 0.0, 0, true};
    if (flo * fhi > 0.0) {
        out.x = std::abs(flo) < std::abs(fhi) ? lo : hi;
        out.f = std::abs(flo) < std::abs(fhi) ? flo : fhi;
        return out;  // no sign change: report best endpoint, not converged
    }
    double x = std::clamp(guess, lo, hi);
    double fx = f(x);
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        if (std::abs(fx) <= ftol) {
            out.x = x;
            out.f = fx;
            out.converged = true;
            return out;
        }
        // Maintain the bracket.
        if (flo * fx < 0.0) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        if (hi - lo <= xtol) {
            out.x = 0.5 * (lo + hi);
            out.f = f(out.x);
            out.converged = std::abs(out.f) <= 16.0 * ftol || (hi - lo) <= xtol;
            return out;
        }
        const double h = std::max(1e-7 * (std::abs(x) + 1.0), 0.25 * xtol);
        const double dfx = (f(x + h) - f(x - h)) / (2.0 * h);
        double xn = x - fx / dfx;
        if (!std::isfinite(xn) || xn <= lo || xn >= hi) {
            xn = 0.5 * (lo + hi);  // bisect
        }
        x = xn;
        fx = f(x);
    }
    out.x = x;
    out.f = fx;
    out.converged = std::abs(fx) <= ftol;
    return out;
}

struct Root2Result {
    double x1 = 0.0;
    double x2 = 0.0;
    double f1 = std::numeric_limits<double>::quiet_NaN();
    double f2 = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
};

// Damped Newton for a 2x2 system with finite-difference Jacobian and a
// halving line search on the residual norm.  Iterates are clamped to
// [lo1,hi1] x [lo2,hi2].
template <class F>
Root2Result newton2_damped(F&& fun, double x1, double x2, double lo1,
                           double hi1, double lo2, double hi2, double ftol,
                           int max_iter = 60) {
    auto clamp1 = [&](double v) { return std::clamp(v, lo1, hi1); };
    auto clamp2 = [&](double v) { return std::clamp(v, lo2, hi2); };
    Root2Result out;
    x1 = clamp1(x1);
    x2 = clamp2(x2);
    double f1 = 0.0, f2 = 0.0;
    fun(x1, x2, f1, f2);
    double norm = std::hypot(f1, f2);
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        if (norm <= ftol) break;
        const double h1 = std::max(1e-7 * (std::abs(x1) + 1.0), 1e-12);
        const double h2 = std::max(1e-7 * (std::abs(x2) + 1.0), 1e-12);
        double a1, a2, b1, b2;
        fun(clamp1(x1 + h1), x2, a1, a2);
        fun(x1, clamp2(x2 + h2), b1, b2);
        const double e1 = clamp1(x1 + h1) - x1;
        const double e2 = clamp2(x2 + h2) - x2;
        const double j11 = (a1 - f1) / e1, j12 = (b1 - f1) / e2;
        const double j21 = (a2 - f2) / e1, j22 = (b2 - f2) / e2;
        const double det = j11 * j22 - j12 * j21;
        double d1, d2;
        if (std::abs(det) < 1e-300 || !std::isfinite(det)) {
            d1 = -f1 / (std::abs(j11) > 1e-300 ? j11 : 1.0);
            d2 = -f2 / (std::abs(j22) > 1e-300 ? j22 : 1.0);
        } else {
            d1 = (-f1 * j22 + f2 * j12) / det;
            d2 = (-f2 * j11 + f1 * j21) / det;
        }
        bool accepted = false;
        double step = 1.0;
        for (int ls = 0; ls < 12; ++ls) {
            const double t1 = clamp1(x1 + step * d1);
            const double t2 = clamp2(x2 + step * d2);
            double g1, g2;
            fun(t1, t2, g1, g2);
            const double tn = std::hypot(g1, g2);
            if (tn < norm) {
                x1 = t1;
                x2 = t2;
                f1 = g1;
                f2 = g2;
                norm = tn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // stalled
    }
    out.x1 = x1;
    out.x2 = x2;
    out.f1 = f1;
    out.f2 = f2;
    out.converged = norm <= ftol;
    return out;
}

// ---------------------------------------------------------------------------
// Thomas algorithm for a tridiagonal system.  Overwrites no inputs; returns
// the solution.  diag/lower/upper use the convention lower[i] multiplies
// x[i-1] in row i (lower[0] unused), upper[i] multiplies x[i+1] in row i
// (upper[n-1] unused).
std::vector<double> tridiag_solve(std::span<const double> lower,
                                  std::span<const double> diag,
                                  std::span<const double> upper,
                                  std::span<const double> rhs);

}  // namespace exbound::num
