#include "exbound/ou.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "exbound/num.hpp"

namespace exbound {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Quadrature grid in the substituted variable w = sqrt(tau - s) on
// [0, wmax]: a block of panels packed quadratically toward w = 0 (short
// memory, where the boundary-layer behaviour of the erf groups lives for
// spots near the absorbing edge) followed by uniform panels.
struct WGrid {
    std::vector<double> w, dw;
};

WGrid build_wgrid(double wmax, int graded, int uniform) {
    graded = std::max(graded, 1);
    uniform = std::max(uniform, 1);
    std::vector<double> edges;
    edges.reserve(static_cast<std::size_t>(graded + uniform) + 1);
    const double split = 0.1 * wmax;
    for (int k = 0; k <= graded; ++k) {
        const double f = static_cast<double>(k) / graded;
        edges.push_back(split * f * f);
    }
    for (int k = 1; k <= uniform; ++k) {
        edges.push_back(split + (wmax - split) * k / uniform);
    }
    WGrid g;
    g.w.reserve(edges.size() * 4);
    g.dw.reserve(edges.size() * 4);
    const auto rule = num::gl4();
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double mid = 0.5 * (edges[p] + edges[p + 1]);
        const double half = 0.5 * (edges[p + 1] - edges[p]);
        if (half <= 0.0) continue;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            g.w.push_back(mid + half * rule.nodes[i]);
            g.dw.push_back(half * rule.weights[i]);
        }
    }
    return g;
}

// Convolution of the transformed payoff v0(zeta) = e^zeta (K - zeta)^+
// against N(zeta; m, var), and its derivative in m:
//   value = e^{m + var/2} [ (K - mh)(Phi(dK) - Phi(d0)) + s(phi(dK) - phi(d0)) ],
//   slope = value + e^{m + var/2} [ K phi(d0)/s - (Phi(dK) - Phi(d0)) ],
// with mh = m + var, s = sqrt(var), dK = (K - mh)/s, d0 = -mh/s.  Every
// exponential is combined with its tail factor before evaluation so large
// |m| cannot overflow.
struct Conv {
    double value = 0.0;
    double slope = 0.0;
};

Conv payoff_convolution(double m, double var, double strike) {
    const double s = std::sqrt(var);
    const double mh = m + var;
    const double dk = (strike - mh) / s;
    const double d0 = -mh / s;
    const double e = m + 0.5 * var;
    const double cdf_k = num::exp_mul_cdf(e, dk);
    const double cdf_0 = num::exp_mul_cdf(e, d0);
    const double pdf_k = std::exp(e - 0.5 * dk * dk) / num::sqrt_two_pi;
    const double pdf_0 = std::exp(e - 0.5 * d0 * d0) / num::sqrt_two_pi;
    Conv out;
    out.value = (strike - mh) * (cdf_k - cdf_0) + s * (pdf_k - pdf_0);
    out.slope = out.value + strike * pdf_0 / s - (cdf_k - cdf_0);
    return out;
}

// exp(a) * phi(d) with the exponents combined.
double exp_mul_pdf(double a, double d) {
    return std::exp(a - 0.5 * d * d) / num::sqrt_two_pi;
}

}  // namespace

void effective_rates(const ModelSpec& spec, double u, double& r_eff,
                     double& q_eff) {
    const double r = spec.r(u);
    const double kap = spec.kappa(u);
    r_eff = r + kap * spec.theta(u) / spec.strike;
    q_eff = r + kap;
}

// ---------------------------------------------------------------------------
// HeatTransform

HeatTransform::HeatTransform(const ModelSpec& spec, int panels) : spec_(spec) {
    if (spec_.kind != ModelKind::Ou) {
        throw std::invalid_argument(
            "HeatTransform: mean-reverting model required");
    }
    spec_.validate();
    panels = std::max(panels, 8);
    t0_ = spec_.valuation_time;
    T_ = spec_.maturity;

    auto fill = [&](SuffixTable& tab, int which) {
        tab.a = t0_;
        tab.b = T_;
        tab.h = (T_ - t0_) / panels;
        tab.panel.resize(panels);
        tab.suffix.assign(panels + 1, 0.0);
        for (int i = 0; i < panels; ++i) {
            const double lo = t0_ + i * tab.h;
            const double hi = (i + 1 == panels) ? T_ : t0_ + (i + 1) * tab.h;
            tab.panel[i] = num::gauss_panel(
                [&](double s) { return integrand(which, s); }, lo, hi,
                num::gl7());
        }
        for (int i = panels - 1; i >= 0; --i) {
            tab.suffix[i] = tab.suffix[i + 1] + tab.panel[i];
        }
    };
    fill(phi_tab_, 0);
    fill(y_tab_, 1);
    fill(beta_tab_, 2);
    tau_max_ = suffix_eval(phi_tab_, 0, t0_);
    if (!(tau_max_ > 0.0) || !std::isfinite(tau_max_)) {
        throw std::invalid_argument(
            "HeatTransform: clock integral must be positive and finite");
    }
    g_terminal_ = spec_.strike * std::exp(spec_.r.integral(t0_, T_));

    const int n_inv = 4096;
    inv_t_.resize(n_inv + 1);
    inv_tau_.resize(n_inv + 1);
    for (int i = 0; i <= n_inv; ++i) {
        inv_t_[i] = t0_ + (T_ - t0_) * i / n_inv;
        inv_tau_[i] = suffix_eval(phi_tab_, 0, inv_t_[i]);
    }
    inv_tau_.front() = tau_max_;
    inv_tau_.back() = 0.0;
}

double HeatTransform::integrand(int which, double s) const {
    const double g = gamma(s);
    const double sig = spec_.sigma(s);
    switch (which) {
        case 0:
            return 0.5 * sig * sig * g * g;
        case 1:
            return g * (spec_.kappa(s) * spec_.theta(s) - g * sig * sig);
        default:
            return spec_.r(s) +
                   0.5 * g * (2.0 * spec_.kappa(s) * spec_.theta(s) -
                              g * sig * sig);
    }
}

double HeatTransform::gamma(double t) const {
    return std::exp(-spec_.kappa.integral(t, T_));
}

double HeatTransform::suffix_eval(const SuffixTable& tab, int which,
                                  double t) const {
    if (t >= tab.b) return 0.0;
    if (t < tab.a) t = tab.a;
    const int n = static_cast<int>(tab.panel.size());
    int i = std::min(static_cast<int>((t - tab.a) / tab.h), n - 1);
    const double edge = (i + 1 == n) ? tab.b : tab.a + (i + 1) * tab.h;
    const double partial = num::gauss_panel(
        [&](double s) { return integrand(which, s); }, t, edge, num::gl7());
    return partial + tab.suffix[i + 1];
}

double HeatTransform::between_eval(const SuffixTable& tab, int which,
                                   double t1, double t2) const {
    if (t1 > t2) return -between_eval(tab, which, t2, t1);
    t1 = std::clamp(t1, tab.a, tab.b);
    t2 = std::clamp(t2, tab.a, tab.b);
    if (t1 == t2) return 0.0;
    const int n = static_cast<int>(tab.panel.size());
    const int i1 = std::min(static_cast<int>((t1 - tab.a) / tab.h), n - 1);
    const int i2 = std::min(static_cast<int>((t2 - tab.a) / tab.h), n - 1);
    auto f = [&](double s) { return integrand(which, s); };
    if (i1 == i2) return num::gauss_panel(f, t1, t2, num::gl7());
    const double edge1 = tab.a + (i1 + 1) * tab.h;
    const double edge2 = tab.a + i2 * tab.h;
    double acc = num::gauss_panel(f, t1, edge1, num::gl7());
    for (int i = i1 + 1; i < i2; ++i) acc += tab.panel[i];
    acc += num::gauss_panel(f, edge2, t2, num::gl7());
    return acc;
}

double HeatTransform::phi(double t) const {
    return suffix_eval(phi_tab_, 0, t);
}

double HeatTransform::y(double t) const { return suffix_eval(y_tab_, 1, t); }

double HeatTransform::beta(double t) const {
    return -suffix_eval(beta_tab_, 2, t);
}

double HeatTransform::y_between(double t_early, double t_late) const {
    return between_eval(y_tab_, 1, t_early, t_late);
}

double HeatTransform::phi_between(double t_early, double t_late) const {
    return between_eval(phi_tab_, 0, t_early, t_late);
}

double HeatTransform::t_of_tau(double tau) const {
    if (tau <= 0.0) return T_;
    if (tau >= tau_max_) return t0_;
    // inv_tau_ decreases from tau_max to 0; bracket then polish by Newton.
    std::size_t lo = 0;
    std::size_t hi = inv_tau_.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (inv_tau_[mid] > tau) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double span = inv_tau_[lo] - inv_tau_[hi];
    const double wgt = span > 0.0 ? (inv_tau_[lo] - tau) / span : 0.5;
    double t = inv_t_[lo] + wgt * (inv_t_[hi] - inv_t_[lo]);
    const double ftol = 1e-15 * std::max(tau_max_, 1.0);
    for (int it = 0; it < 8; ++it) {
        const double f = phi(t) - tau;
        if (std::abs(f) <= ftol) break;
        const double fp = -integrand(0, t);  // d phi / dt
        double tn = t - f / fp;
        if (!std::isfinite(tn)) break;
        t = std::clamp(tn, t0_, T_);
    }
    return t;
}

double HeatTransform::g_of(double t) const {
    return spec_.strike * std::exp(-beta(t) + spec_.r.integral(t0_, t));
}

double HeatTransform::lambda_of(double t) const {
    const double g = g_of(t);
    const double gm = gamma(t);
    const double sig = spec_.sigma(t);
    return -g * (2.0 * spec_.kappa(t) * spec_.theta(t) - gm * sig * sig) /
           (sig * sig * gm);
}

// ---------------------------------------------------------------------------
// Image heat kernel

double greens_heat(double z, double xi, double tau, double y_tau) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("greens_heat: needs tau > 0");
    }
    const double norm = 2.0 * std::sqrt(kPi * tau);
    const double d1 = z - xi;
    const double d2 = z + xi - 2.0 * y_tau;
    return (std::exp(-d1 * d1 / (4.0 * tau)) -
            std::exp(-d2 * d2 / (4.0 * tau))) /
           norm;
}

// ---------------------------------------------------------------------------
// Boundary-gradient Volterra solve

double GradientProfile::value_at(double tau_q) const {
    if (tau.empty()) return 0.0;
    if (tau_q <= tau.front()) return psi.front();
    if (tau_q >= tau.back()) return psi.back();
    std::size_t hi = 1;
    // graded grid: index from the inverse of tau_j = tau_max (j/M)^2
    const std::size_t m = tau.size() - 1;
    const double rel = std::sqrt(tau_q / tau.back());
    hi = std::min(
        std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(rel * static_cast<double>(m)))),
        m);
    while (hi > 1 && tau[hi - 1] > tau_q) --hi;
    while (hi < m && tau[hi] < tau_q) ++hi;
    const double w = (tau_q - tau[hi - 1]) / (tau[hi] - tau[hi - 1]);
    return psi[hi - 1] + w * (psi[hi] - psi[hi - 1]);
}

GradientProfile solve_gradient(const HeatTransform& transform,
                               const GradientOptions& opt) {
    const int m = std::max(opt.n_nodes, 8);
    const double tau_max = transform.tau_max();
    GradientProfile prof;
    prof.tau.resize(m + 1);
    prof.psi.assign(m + 1, 0.0);
    for (int j = 0; j <= m; ++j) {
        const double f = static_cast<double>(j) / m;
        prof.tau[j] = tau_max * f * f;
    }

    const double strike = transform.spec().strike;
    const double g_term = transform.g_terminal();
    std::vector<std::vector<double>> rows(m + 1);
    std::vector<double> rhs(m + 1, 0.0);

    for (int j = 1; j <= m; ++j) {
        const double tau = prof.tau[j];
        const double tj = transform.t_of_tau(tau);
        const double yj = transform.y(tj);
        const WGrid wg =
            build_wgrid(std::sqrt(tau), opt.graded_panels, opt.w_panels);

        std::vector<double> coef(m + 1, 0.0);
        double lam_acc = 0.0;
        for (std::size_t g = 0; g < wg.w.size(); ++g) {
            const double w = wg.w[g];
            const double dw = wg.dw[g];
            const double s = std::max(tau - w * w, 0.0);
            const double ts = transform.t_of_tau(s);
            const double gap = transform.y_between(tj, ts);  // Y - B(s)
            const double a = gap / (2.0 * w);
            const double damp = std::exp(-a * a);
            if (!opt.zero_data) {
                lam_acc += transform.lambda_of(ts) * damp * dw;
            }
            const double ker = gap * damp / (num::sqrt_pi * w * w) * dw;
            // distribute onto the piecewise-linear hat functions at s
            const double rel = std::sqrt(std::min(s / tau_max, 1.0));
            int k = static_cast<int>(
                std::ceil(rel * static_cast<double>(m)));
            k = std::clamp(k, 1, m);
            while (k > 1 && prof.tau[k - 1] > s) --k;
            while (k < m && prof.tau[k] < s) ++k;
            const double theta = std::clamp(
                (s - prof.tau[k - 1]) / (prof.tau[k] - prof.tau[k - 1]), 0.0,
                1.0);
            coef[k - 1] += ker * (1.0 - theta);
            coef[k] += ker * theta;
        }
        double r_val = 0.0;
        if (!opt.zero_data) {
            const Conv conv = payoff_convolution(yj, 2.0 * tau, strike);
            const double a0 = yj / (2.0 * std::sqrt(tau));
            const double qz = -g_term * std::exp(-a0 * a0) /
                                  std::sqrt(kPi * tau) +
                              (2.0 / num::sqrt_pi) * lam_acc;
            r_val = 2.0 * conv.slope + qz;
        }
        coef[1] += coef[0];  // psi_0 is pinned to psi_1
        coef[0] = 0.0;
        double acc = r_val;
        for (int k = 1; k < j; ++k) acc += coef[k] * prof.psi[k];
        prof.psi[j] = acc / (1.0 - coef[j]);
        rows[j] = std::move(coef);
        rhs[j] = r_val;
    }
    prof.psi[0] = prof.psi[1];

    double max_res = 0.0;
    for (int j = 1; j <= m; ++j) {
        double acc = rhs[j];
        for (int k = 1; k <= j; ++k) acc += rows[j][k] * prof.psi[k];
        max_res = std::max(max_res, std::abs(prof.psi[j] - acc));
    }
    prof.max_residual = max_res;
    return prof;
}

// ---------------------------------------------------------------------------
// OuModel

struct OuModel::EvalContext {
    double t = 0.0;
    double tau = 0.0;
    double sqrt_tau = 0.0;
    double y_t = 0.0;
    double g_tau = 0.0;
    double beta_t = 0.0;
    double gamma_t = 0.0;
    std::vector<double> w, dw, sw, gap, lam, psi;
};

OuModel::OuModel(const ModelSpec& spec, int panels, const GradientOptions& gopt)
    : spec_(spec),
      transform_(spec, panels),
      gradient_(solve_gradient(transform_, gopt)) {}

std::shared_ptr<const OuModel::EvalContext> OuModel::context(double t) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = contexts_.find(t);
        if (it != contexts_.end()) return it->second;
    }
    auto ctx = std::make_shared<EvalContext>();
    ctx->t = t;
    ctx->tau = transform_.phi(t);
    ctx->sqrt_tau = std::sqrt(ctx->tau);
    ctx->y_t = transform_.y(t);
    ctx->g_tau = transform_.g_of(t);
    ctx->beta_t = transform_.beta(t);
    ctx->gamma_t = transform_.gamma(t);
    if (ctx->tau > 0.0) {
        const WGrid wg = build_wgrid(ctx->sqrt_tau, 12, 64);
        const std::size_t n = wg.w.size();
        ctx->w = wg.w;
        ctx->dw = wg.dw;
        ctx->sw.resize(n);
        ctx->gap.resize(n);
        ctx->lam.resize(n);
        ctx->psi.resize(n);
        for (std::size_t g = 0; g < n; ++g) {
            const double w = wg.w[g];
            const double s = std::max(ctx->tau - w * w, 0.0);
            const double ts = transform_.t_of_tau(s);
            ctx->sw[g] = 2.0 * w * wg.dw[g];
            ctx->gap[g] = transform_.y_between(t, ts);  // y(t) - B(s)
            ctx->lam[g] = transform_.lambda_of(ts);
            ctx->psi[g] = gradient_.value_at(s);
        }
    }
    std::lock_guard<std::mutex> lock(mutex_);
    return contexts_.emplace(t, std::move(ctx)).first->second;
}

const OuModel::PairCache& OuModel::pair_cache(double t, double u) const {
    const auto key = std::make_pair(t, u);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = pairs_.find(key);
    if (it != pairs_.end()) return it->second;
    PairCache pc;
    if (u > t) {
        pc.var = 2.0 * transform_.phi_between(t, u);
        pc.y_gap = transform_.y_between(t, u);
    }
    pc.gamma_u = transform_.gamma(u);
    return pairs_.emplace(key, pc).first->second;
}

double OuModel::european_put(double t, double x) const {
    if (!(x >= 0.0)) {
        throw std::invalid_argument("european_put: needs x >= 0");
    }
    const double strike = spec_.strike;
    if (t >= spec_.maturity) return std::max(strike - x, 0.0);
    if (t < spec_.valuation_time - 1e-12 * (1.0 + std::abs(t))) {
        throw std::invalid_argument("european_put: t below the valuation time");
    }
    const auto ctx = context(t);
    if (!(ctx->tau > 0.0)) return std::max(strike - x, 0.0);

    const double dz = x * ctx->gamma_t;  // z - y(t), exact product
    const double tau = ctx->tau;
    const double y_t = ctx->y_t;

    // Payoff convolution against the image pair.
    const double conv = payoff_convolution(y_t + dz, 2.0 * tau, strike).value -
                        payoff_convolution(y_t - dz, 2.0 * tau, strike).value;

    // Boundary-data group (closed erf form after integrating the kernel in
    // the spatial variable) and the gradient layer.
    double q_acc = 0.0;
    double l_acc = 0.0;
    const std::size_t n = ctx->w.size();
    for (std::size_t g = 0; g < n; ++g) {
        const double inv2w = 0.5 / ctx->w[g];
        const double p = (dz + ctx->gap[g]) * inv2w;
        const double q = (dz - ctx->gap[g]) * inv2w;
        q_acc += ctx->lam[g] * (std::erf(p) + std::erf(q)) * ctx->sw[g];
        l_acc += ctx->psi[g] * (std::exp(-p * p) - std::exp(-q * q)) *
                 ctx->dw[g];
    }
    const double inv2rt = 0.5 / ctx->sqrt_tau;
    const double data_group =
        ctx->g_tau -
        transform_.g_terminal() * 0.5 *
            (std::erf((dz + y_t) * inv2rt) + std::erf((dz - y_t) * inv2rt)) +
        0.5 * q_acc;
    const double layer = -l_acc / num::sqrt_pi;

    const double v = conv + data_group + layer;
    return std::exp(ctx->beta_t - ctx->gamma_t * x) * v;
}

void OuModel::density_functionals(double t, double x, double u, double b,
                                  double& psi1, double& psi2) const {
    if (!(x >= 0.0)) {
        throw std::invalid_argument("density_functionals: needs x >= 0");
    }
    psi1 = 0.0;
    psi2 = 0.0;
    if (!(b > 0.0)) return;
    const PairCache& pc = pair_cache(t, u);
    if (!(pc.var > 0.0)) {  // degenerate horizon: point mass at x
        if (x < b) {
            psi1 = 1.0;
            psi2 = x;
        }
        return;
    }
    const double xg = x * transform_.gamma(t);
    const double s = std::sqrt(pc.var);
    const double bgu = b * pc.gamma_u;
    const double base = pc.y_gap + pc.var;
    const double dc1 = (bgu - xg - base) / s;
    const double da1 = (-xg - base) / s;
    const double dc2 = (bgu + xg - base) / s;
    const double da2 = (xg - base) / s;
    const double jw = -2.0 * xg;  // log weight of the reflected charge

    const double cdf_c1 = num::norm_cdf(dc1);
    const double cdf_a1 = num::norm_cdf(da1);
    const double cdf_c2 = num::exp_mul_cdf(jw, dc2);
    const double cdf_a2 = num::exp_mul_cdf(jw, da2);

    const double p1 = (cdf_c1 - cdf_a1) - (cdf_c2 - cdf_a2);

    const double m1y = xg + base;   // m1 - y(u), direct charge
    const double m2y = -xg + base;  // m2 - y(u), reflected charge
    const double mom1 = m1y * (cdf_c1 - cdf_a1) +
                        s * (num::norm_pdf(da1) - num::norm_pdf(dc1));
    const double mom2 = m2y * (cdf_c2 - cdf_a2) +
                        s * (exp_mul_pdf(jw, da2) - exp_mul_pdf(jw, dc2));

    psi1 = std::clamp(p1, 0.0, 1.0);
    psi2 = std::max((mom1 - mom2) / pc.gamma_u, 0.0);
}

// ---------------------------------------------------------------------------
// Backend plumbing and pricing entry points

double OuBackend::eff_r(double u) const {
    double r_eff = 0.0, q_eff = 0.0;
    effective_rates(model_->spec(), u, r_eff, q_eff);
    return r_eff;
}

double OuBackend::eff_q(double u) const {
    double r_eff = 0.0, q_eff = 0.0;
    effective_rates(model_->spec(), u, r_eff, q_eff);
    return q_eff;
}

BoundarySolution solve_boundary_ou(std::shared_ptr<const OuModel> model,
                                   const SolverOptions& opt) {
    OuBackend backend(std::move(model));
    return solve_boundary(backend, opt);
}

PricingResult american_put_ou(std::shared_ptr<const OuModel> model,
                              const ExerciseBoundary& boundary, double t,
                              double x) {
    OuBackend backend(std::move(model));
    return price_put(backend, boundary, t, x);
}

// ---------------------------------------------------------------------------
// Static hedge

double HedgeDecomposition::premium() const {
    return std::accumulate(slices.begin(), slices.end(), 0.0,
                           [](double acc, const HedgeSlice& s) {
                               return acc + s.contribution;
                           });
}

double HedgeDecomposition::premium_through(std::size_t n) const {
    n = std::min(n, slices.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += slices[i].contribution;
    return acc;
}

HedgeDecomposition static_hedge_eep(const OuModel& model,
                                    const ExerciseBoundary& boundary, double t,
                                    double x, int n_slices) {
    const ModelSpec& spec = model.spec();
    const double maturity = spec.maturity;
    if (!(t < maturity)) {
        throw std::invalid_argument("static_hedge_eep: needs t < maturity");
    }
    if (!(x >= 0.0)) {
        throw std::invalid_argument("static_hedge_eep: needs x >= 0");
    }
    n_slices = std::max(n_slices, 1);

    struct Leg {
        double f = 0.0, p_con = 0.0, p_aon = 0.0, x_up = 0.0;
    };
    const double guard = 1e-12;
    auto eval = [&](double u) -> Leg {
        const double ue = std::clamp(u, t + guard, maturity);
        const BoundaryNode node = interpolate_boundary(boundary, ue);
        if (node.state == NodeState::Empty) return {};
        double hi = node.upper;
        double lo = 0.0;
        if (node.state == NodeState::Double) {
            hi = std::max(node.upper, node.lower);
            lo = std::min(node.upper, node.lower);
        }
        double p1h = 0.0, p2h = 0.0, p1l = 0.0, p2l = 0.0;
        model.density_functionals(t, x, ue, hi, p1h, p2h);
        if (lo > 0.0) model.density_functionals(t, x, ue, lo, p1l, p2l);
        double r_eff = 0.0, q_eff = 0.0;
        effective_rates(spec, ue, r_eff, q_eff);
        Leg leg;
        leg.p_con = spec.strike * (p1h - p1l);
        leg.p_aon = p2h - p2l;
        leg.f = spec.discount(t, ue) * (r_eff * leg.p_con - q_eff * leg.p_aon);
        leg.x_up = hi;
        return leg;
    };

    HedgeDecomposition out;
    out.t = t;
    out.x = x;
    out.slices.reserve(n_slices);
    const double h = (maturity - t) / n_slices;
    for (int i = 0; i < n_slices; ++i) {
        const double a = t + i * h;
        const double b = (i + 1 == n_slices) ? maturity : t + (i + 1) * h;
        const Leg fa = eval(a);
        const Leg fm = eval(0.5 * (a + b));
        const Leg fb = eval(b);
        HedgeSlice slice;
        slice.u = b;
        slice.x_upper = fb.x_up;
        slice.p_con = fb.p_con;
        slice.p_aon = fb.p_aon;
        slice.contribution = (b - a) / 6.0 * (fa.f + 4.0 * fm.f + fb.f);
        out.slices.push_back(slice);
    }
    return out;
}

}  // namespace exbound
