#pragma once

#include <string>
#include <vector>

#include "relaxflow/network.hpp"

namespace relaxflow {

/// Per-bus complex voltages, aligned with Network::buses.
struct VoltageProfile {
    std::vector<Complex> v;
};

/// Per-arc complex flows over E ∪ E^R, keyed by branch index so parallel
/// branches stay distinct: arc b is the from-side flow of branch b, arc
/// branch_count + b the to-side flow.
struct FlowSet {
    std::vector<Complex> s;

    static std::size_t arc_count(const Network& net) { return 2 * net.branches.size(); }
    std::size_t from_arc(std::size_t branch) const { return branch; }
    std::size_t to_arc(std::size_t branch) const { return s.size() / 2 + branch; }
};

struct ACState {
    VoltageProfile voltages;
    FlowSet flows;
    std::vector<Complex> bus_generation;  ///< per bus, total S^g
};

// --- Branch-level evaluators -------------------------------------------------

/// From-side power flow: S_ij = (Y* - i b/2) |V_i|^2/|T|^2 - Y* V_i V_j* / T*.
Complex branch_flow_from(Complex v_i, Complex v_j, const Branch& branch);

/// To-side power flow: S_ji = (Y* - i b/2) |V_j|^2 - Y* V_i* V_j / T.
Complex branch_flow_to(Complex v_i, Complex v_j, const Branch& branch);

/// Series current seen from the from side: I = (Y + i b/2) V_i/T* - Y V_j.
Complex branch_current(Complex v_i, Complex v_j, const Branch& branch);

/// Closed form for |I|^2 in terms of voltages and the from-side flow.
double abs_sq_current_rhs(Complex v_i, Complex v_j, Complex s_ij, const Branch& branch);

/// (S_ij + S_ji) minus the line-loss expression; ~0 for any voltages.
Complex loss_identity_residual(Complex v_i, Complex v_j, const Branch& branch);

/// Voltage-drop identity residual; both sides are real, so the imaginary
/// part of the complex residual is itself a consistency check.
double voltage_drop_identity_residual(Complex v_i, Complex v_j, const Branch& branch);
Complex voltage_drop_identity_residual_complex(Complex v_i, Complex v_j, const Branch& branch);

/// Factored voltage product: V_i V_j* = Z* T* ((Y* - i b/2) W_i/|T|^2 - S_ij).
Complex vv_product(double w_i, Complex s_ij, const Branch& branch);

// --- Network-level checks ----------------------------------------------------

/// KCL residual per bus: S^g - S^d - (Y^s)* |V|^2 - sum of incident arc flows.
/// Throws ModelError when the flow set does not cover every arc.
std::vector<Complex> kcl_residuals(const Network& network, const ACState& state);

struct BoundViolation {
    std::string entity;
    std::string bound;  ///< "v_max", "pad", "thermal", "p_max", ...
    double value = 0.0;
    double limit = 0.0;
    double slack = 0.0;  ///< amount by which the bound is exceeded
};

/// Every violated operational bound (reference angle, voltage, generator
/// box aggregated per bus, thermal, PAD). Ties at a bound are feasible.
std::vector<BoundViolation> operational_violations(const Network& network, const ACState& state,
                                                   double tol);

// --- Reference Newton solver -------------------------------------------------

struct PowerFlowControls {
    struct GeneratorControl {
        double p_set = 0.0;  ///< p.u.
        double v_set = 1.0;
    };
    std::vector<GeneratorControl> gens;  ///< aligned with Network::generators

    /// Controls taken from the generators' stored dispatch setpoints.
    static PowerFlowControls from_setpoints(const Network& network);
};

struct NewtonOptions {
    double tol = 1e-8;  ///< max-norm KCL mismatch target
    int max_iter = 50;
};

/// Full-Jacobian Newton in polar coordinates from a flat start. The
/// reference bus is slack, generator buses hold |V| and P, load buses hold
/// P and Q. Flows are recomputed from the converged voltages. Throws
/// SolveError (with the mismatch trace) on divergence or a singular system.
ACState newton_solve(const Network& network, const PowerFlowControls& controls,
                     const NewtonOptions& opts = {});

/// Splits bus-level generation among the generators at each bus, loading
/// every box at a common utilization fraction.
std::vector<Complex> allocate_generation(const Network& network,
                                         const std::vector<Complex>& bus_generation);

/// Total generation cost of a state, in currency units (uses base_mva to
/// convert per-unit output back to MW).
double generation_cost(const Network& network, const std::vector<Complex>& bus_generation);

}  // namespace relaxflow
