#include "exbound/regime.hpp"

#include <cmath>
#include <stdexcept>

namespace exbound {

PointRegime classify_point(double r, double q) {
    if (r > 0.0) {
        if (q <= 0.0 || r > q) return {1, RegionShape::BelowStrike};
        return {1, RegionShape::BelowRatio};  // 0 < r <= q
    }
    if (r == 0.0) {
        if (q < 0.0) return {1, RegionShape::BelowStrike};
        return {0, RegionShape::Empty};
    }
    // r < 0
    if (q < r) return {2, RegionShape::Band};
    return {0, RegionShape::Empty};
}

namespace {

bool same_regime(const PointRegime& a, const PointRegime& b) {
    return a.boundaries == b.boundaries && a.shape == b.shape;
}

}  // namespace

std::vector<RegimeSegment> segment_timeline(const ModelSpec& spec) {
    return segment_timeline(
        spec.valuation_time, spec.maturity,
        [&spec](double t) { return spec.r(t); },
        [&spec](double t) { return spec.q(t); });
}

std::vector<RegimeSegment> segment_timeline(
    double t0, double T, const std::function<double(double)>& r_of,
    const std::function<double(double)>& q_of) {
    const int scan = 512;
    const double h = (T - t0) / scan;

    auto classify_at = [&](double t) {
        return classify_point(r_of(t), q_of(t));
    };

    std::vector<RegimeSegment> out;
    PointRegime current = classify_at(t0);
    double seg_start = t0;
    int switches = 0;

    for (int i = 1; i <= scan; ++i) {
        const double t = t0 + i * h;
        PointRegime here = classify_at(t);
        if (same_regime(here, current)) continue;
        if (++switches > 64) {
            throw std::runtime_error(
                "regime: more than 64 classification switches; "
                "parameter curves look pathological");
        }
        // Bisect for the switch time inside (t - h, t].
        double lo = t - h, hi = t;
        for (int it = 0; it < 80 && hi - lo > 1e-14 * (T - t0); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (same_regime(classify_at(mid), current)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const double t_switch = 0.5 * (lo + hi);
        out.push_back({seg_start, t_switch, current});
        seg_start = t_switch;
        current = here;
    }
    out.push_back({seg_start, T, current});
    return out;
}

TerminalValues terminalvalues_impl(const ModelSpec& spec, double t) {
    const double r = spec.r(t);
    const double q = spec.q(t);
    const double K = spec.strike;
    const PointRegime cls = classify_point(r, q);
    TerminalValues tv;
    switch (cls.shape) {
        case RegionShape::Empty:
            break;
        case RegionShape::BelowStrike:
            tv.has_upper = true;
            tv.upper = K;
            break;
        case RegionShape::BelowRatio:
            tv.has_upper = true;
            tv.upper = K * r / q;
            break;
        case RegionShape::Band:
            tv.has_upper = true;
            tv.upper = K;
            tv.has_lower = true;
            tv.lower = K * r / q;
            break;
    }
    return tv;
}

TerminalValues terminal_boundary_values(const ModelSpec& spec) {
    return terminalvalues_impl(spec, spec.maturity);
}

}  // namespace exbound
