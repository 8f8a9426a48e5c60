#include "exbound/curves.hpp"

#include <cstdio>

namespace exbound {

std::string ParamCurve::describe() const {
    char buf[128];
    if (kind_ == Kind::Constant) {
        std::snprintf(buf, sizeof(buf), "const(%.6g)", a_);
    } else {
        std::snprintf(buf, sizeof(buf), "%.6g*exp(-%.6g*t)%+.6g", a_, b_, c_);
    }
    return buf;
}

void ModelSpec::validate() const {
    if (!(strike > 0.0)) {
        throw std::invalid_argument("model: strike must be positive");
    }
    if (!(maturity > valuation_time)) {
        throw std::invalid_argument(
            "model: maturity must exceed the valuation time");
    }
    const int samples = 257;
    for (int i = 0; i <= samples; ++i) {
        const double t =
            valuation_time + (maturity - valuation_time) * i / samples;
        if (!(sigma(t) > 0.0)) {
            throw std::invalid_argument(
                "model: volatility must stay positive on [t0, T]");
        }
        if (kind == ModelKind::Ou && kappa(t) < 0.0) {
            throw std::invalid_argument(
                "model: mean-reversion speed must be non-negative");
        }
    }
}

}  // namespace exbound
