#pragma once

#include <cstddef>
#include <vector>

// Discretized exercise-boundary data shared by the solver, the pricing
// assembly and the CLI output layers.
namespace exbound {

enum class NodeState { Empty, Single, Double };

struct BoundaryNode {
    double u = 0.0;          // node time
    NodeState state = NodeState::Empty;
    double upper = 0.0;      // valid unless Empty
    double lower = 0.0;      // valid only when Double
    bool swapped = false;    // solved labels cross (upper < lower)
    bool decoupled = false;  // coupled solve failed; values from scalar passes
    double residual = 0.0;   // |value-matching defect| at the node (price units)
    int iterations = 0;
    bool converged = true;
};

struct ExerciseBoundary {
    double valuation_time = 0.0;
    double maturity = 0.0;
    double strike = 0.0;
    std::vector<BoundaryNode> nodes;  // ascending in u; covers [t0, T]

    bool all_empty() const {
        for (const auto& n : nodes) {
            if (n.state != NodeState::Empty) return false;
        }
        return true;
    }
};

// Backward-graded grid: node spacing shrinks quadratically toward T where
// the boundary has square-root behavior.  u_k = T - (T-t0)*((n-k)/n)^2,
// k = 0..n, so u_0 = t0 and u_n = T.
std::vector<double> graded_time_grid(double t0, double T, int n);

struct BoundaryEvent {
    enum class Kind { Emergence, Collapse, Reappearance, Swap };
    Kind kind;
    double time = 0.0;
};

const char* event_kind_name(BoundaryEvent::Kind k);

struct SolveReport {
    std::vector<BoundaryEvent> events;  // sorted ascending in time
    double max_residual = 0.0;
    int unconverged_nodes = 0;
    // Subset of unconverged nodes attributed to a change of section
    // topology: a section opening or closing between nodes admits no exact
    // node representation, leaving defects up to the one-interval
    // quadrature quantum du * (|eff_r| K + |eff_q| K) on nodes near the
    // change and, with decaying size, on contiguous runs of neighbours.
    // Such defects are grid artifacts, not solver failures.
    int transition_nodes = 0;
    double wall_seconds = 0.0;

    // Unconverged nodes not explained by a topology transition.
    int genuine_failures() const {
        return unconverged_nodes - transition_nodes;
    }
};

// Forward-in-time scan of the solved boundary:
//  - emergence: the lower boundary climbs through small_eps;
//  - collapse: the gap upper-lower falls through gap_eps;
//  - reappearance: the gap climbs back through gap_eps;
//  - swap: the gap changes sign while both values exceed small_eps.
// Event times are linearly interpolated between nodes.
SolveReport detect_events(const ExerciseBoundary& boundary, double small_eps,
                          double gap_eps);

// Boundary values at an off-grid time.  Between nodes of equal state the
// levels interpolate linearly; across a state change the two
// representations are not connected by a continuous path, so the nearer
// node's picture applies (the midpoint acts as the flip time).  Times
// outside the node span clamp to the nearest node.
BoundaryNode interpolate_boundary(const ExerciseBoundary& boundary, double u);

}  // namespace exbound
