#include "exbound/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exbound {

std::vector<double> graded_time_grid(double t0, double T, int n) {
    if (!(T > t0) || n < 2) {
        throw std::invalid_argument("graded_time_grid: need T > t0 and n >= 2");
    }
    std::vector<double> grid(n + 1);
    for (int k = 0; k <= n; ++k) {
        const double s = static_cast<double>(n - k) / n;
        grid[k] = T - (T - t0) * s * s;
    }
    grid.front() = t0;
    grid.back() = T;
    return grid;
}

const char* event_kind_name(BoundaryEvent::Kind k) {
    switch (k) {
        case BoundaryEvent::Kind::Emergence: return "emergence";
        case BoundaryEvent::Kind::Collapse: return "collapse";
        case BoundaryEvent::Kind::Reappearance: return "reappearance";
        case BoundaryEvent::Kind::Swap: return "swap";
    }
    return "?";
}

namespace {

double cross_time(double u0, double v0, double u1, double v1, double level) {
    if (v1 == v0) return 0.5 * (u0 + u1);
    const double w = (level - v0) / (v1 - v0);
    return u0 + (u1 - u0) * std::clamp(w, 0.0, 1.0);
}

}  // namespace

SolveReport detect_events(const ExerciseBoundary& boundary, double small_eps,
                          double gap_eps) {
    SolveReport rep;
    const auto& nodes = boundary.nodes;
    // A single empty node wedged between live sections is below the grid's
    // resolving power (a near-tangency artifact), as is a single live node
    // inside an empty stretch; both are ignored for event purposes.
    auto solid = [&nodes](std::size_t i) {
        const bool e = nodes[i].state == NodeState::Empty;
        const bool prev_same =
            i > 0 && (nodes[i - 1].state == NodeState::Empty) == e;
        const bool next_same =
            i + 1 < nodes.size() &&
            (nodes[i + 1].state == NodeState::Empty) == e;
        return prev_same || next_same;
    };
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const auto& a = nodes[i];
        const auto& b = nodes[i + 1];
        const double lo_a = a.state == NodeState::Double ? a.lower : 0.0;
        const double lo_b = b.state == NodeState::Double ? b.lower : 0.0;

        // Lower boundary leaving the near-zero band (forward in time),
        // with the section alive on both sides.
        if (a.state != NodeState::Empty && lo_a <= small_eps &&
            lo_b > small_eps) {
            rep.events.push_back({BoundaryEvent::Kind::Emergence,
                                  cross_time(a.u, lo_a, b.u, lo_b, small_eps)});
        }

        if (a.state == NodeState::Double && b.state == NodeState::Double) {
            const double ga = a.upper - a.lower;
            const double gb = b.upper - b.lower;
            if (ga > gap_eps && gb <= gap_eps) {
                rep.events.push_back({BoundaryEvent::Kind::Collapse,
                                      cross_time(a.u, ga, b.u, gb, gap_eps)});
            }
            if (ga <= gap_eps && gb > gap_eps) {
                rep.events.push_back({BoundaryEvent::Kind::Reappearance,
                                      cross_time(a.u, ga, b.u, gb, gap_eps)});
            }
            const bool both_alive = std::min({a.upper, a.lower, b.upper,
                                              b.lower}) > small_eps;
            if (both_alive && ga * gb < 0.0) {
                rep.events.push_back({BoundaryEvent::Kind::Swap,
                                      cross_time(a.u, ga, b.u, gb, 0.0)});
            }
        }
        // A band vanishing into (or re-opening out of) a fully empty
        // stretch: treat the empty side as a zero gap.
        if (a.state == NodeState::Double && b.state == NodeState::Empty &&
            solid(i) && solid(i + 1)) {
            const double ga = a.upper - a.lower;
            if (ga > gap_eps) {
                rep.events.push_back({BoundaryEvent::Kind::Collapse,
                                      cross_time(a.u, ga, b.u, 0.0, gap_eps)});
            }
        }
        if (a.state == NodeState::Empty && b.state == NodeState::Double &&
            solid(i) && solid(i + 1)) {
            const double gb = b.upper - b.lower;
            if (gb > gap_eps) {
                rep.events.push_back({BoundaryEvent::Kind::Reappearance,
                                      cross_time(a.u, 0.0, b.u, gb, gap_eps)});
            }
        }
    }
    std::sort(rep.events.begin(), rep.events.end(),
              [](const BoundaryEvent& x, const BoundaryEvent& y) {
                  return x.time < y.time;
              });
    for (const auto& n : nodes) {
        rep.max_residual = std::max(rep.max_residual, n.residual);
        if (!n.converged) ++rep.unconverged_nodes;
    }
    return rep;
}

BoundaryNode interpolate_boundary(const ExerciseBoundary& boundary, double u) {
    const auto& nodes = boundary.nodes;
    if (nodes.empty()) {
        throw std::invalid_argument("interpolate_boundary: empty boundary");
    }
    if (u <= nodes.front().u) return nodes.front();
    if (u >= nodes.back().u) return nodes.back();
    std::size_t hi = 1;
    while (hi < nodes.size() && nodes[hi].u < u) ++hi;
    const auto& a = nodes[hi - 1];
    const auto& b = nodes[hi];
    const double w = (u - a.u) / (b.u - a.u);
    auto lerp = [w](double va, double vb) { return va + w * (vb - va); };

    BoundaryNode out;
    out.u = u;
    out.converged = a.converged && b.converged;
    out.residual = std::max(a.residual, b.residual);
    if (a.state != b.state) {
        // A section is born, dies or changes shape somewhere inside the
        // interval; the two representations are not connected by a
        // continuous path, so the nearer node's picture applies with the
        // midpoint as the flip time.
        const BoundaryNode& near_node = (w < 0.5) ? a : b;
        out.state = near_node.state;
        out.upper = near_node.upper;
        out.lower = near_node.lower;
        return out;
    }
    out.state = a.state;
    if (out.state == NodeState::Empty) return out;
    out.upper = lerp(a.upper, b.upper);
    if (out.state == NodeState::Double) out.lower = lerp(a.lower, b.lower);
    return out;
}

}  // namespace exbound
