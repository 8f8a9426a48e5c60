#pragma once

#include <functional>
#include <vector>

#include "exbound/curves.hpp"

// Pointwise-in-time classification of the immediate-exercise gain region
// for the put.  With gain H(u, X) = r(u) K - q(u) X on {X < K}, the sign
// pattern of (r, q, r - q) decides how many exercise boundaries are alive
// at that instant and what shape the candidate region has.
namespace exbound {

enum class RegionShape {
    Empty,        // exercising never beats waiting at this instant
    BelowStrike,  // {0 < X < K}
    BelowRatio,   // {0 < X < K r/q}, 0 < r <= q
    Band          // {K r/q < X < K}, q < r < 0
};

struct PointRegime {
    int boundaries = 0;  // number of exercise boundaries: 0, 1 or 2
    RegionShape shape = RegionShape::Empty;
};

PointRegime classify_point(double r, double q);

struct RegimeSegment {
    double t_begin = 0.0;
    double t_end = 0.0;
    PointRegime regime;
};

// Splits [valuation_time, maturity] into maximal intervals of constant
// classification.  Switch times are refined by bisection; a tangency of
// r or q with zero that does not change the classification does not
// produce a segment break.
std::vector<RegimeSegment> segment_timeline(const ModelSpec& spec);

// Same splitting for arbitrary rate functions; this is how the
// mean-reverting model is segmented (classification runs on its effective
// exercise-gain rates rather than on the raw curves).
std::vector<RegimeSegment> segment_timeline(
    double t0, double T, const std::function<double(double)>& r_of,
    const std::function<double(double)>& q_of);

struct TerminalValues {
    bool has_upper = false;
    double upper = 0.0;
    bool has_lower = false;
    double lower = 0.0;
};

// Limits of the exercise boundaries as t -> maturity, read off the
// classification at the terminal instant.
TerminalValues terminal_boundary_values(const ModelSpec& spec);

}  // namespace exbound
