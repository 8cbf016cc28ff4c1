#include "relaxflow/acpf.hpp"

#include <cmath>

namespace relaxflow {

namespace {

const Complex kImag(0.0, 1.0);

}  // namespace

Complex branch_flow_from(Complex v_i, Complex v_j, const Branch& branch) {
    const Complex y = admittance(branch);
    const Complex t = tap_complex(branch);
    const double t2 = std::norm(t);
    return (std::conj(y) - kImag * (branch.b_charge / 2.0)) * (std::norm(v_i) / t2) -
           std::conj(y) * (v_i * std::conj(v_j) / std::conj(t));
}

Complex branch_flow_to(Complex v_i, Complex v_j, const Branch& branch) {
    const Complex y = admittance(branch);
    const Complex t = tap_complex(branch);
    return (std::conj(y) - kImag * (branch.b_charge / 2.0)) * std::norm(v_j) -
           std::conj(y) * (std::conj(v_i) * v_j / t);
}

Complex branch_current(Complex v_i, Complex v_j, const Branch& branch) {
    const Complex y = admittance(branch);
    const Complex t = tap_complex(branch);
    return (y + kImag * (branch.b_charge / 2.0)) * (v_i / std::conj(t)) - y * v_j;
}

double abs_sq_current_rhs(Complex v_i, Complex v_j, Complex s_ij, const Branch& branch) {
    const Complex y = admittance(branch);
    const Complex t = tap_complex(branch);
    const double t2 = std::norm(t);
    const double half_b = branch.b_charge / 2.0;
    const Complex vv = v_i * std::conj(v_j);
    const Complex quad = std::norm(v_i) / t2 - vv / std::conj(t) - std::conj(vv) / t +
                         Complex(std::norm(v_j), 0.0);
    return std::norm(y) * quad.real() - half_b * half_b * std::norm(v_i) / t2 -
           branch.b_charge * s_ij.imag();
}

Complex loss_identity_residual(Complex v_i, Complex v_j, const Branch& branch) {
    const Complex y = admittance(branch);
    const Complex t = tap_complex(branch);
    const double t2 = std::norm(t);
    const Complex vv = v_i * std::conj(v_j);
    const Complex quad =
        std::norm(v_i) / t2 - vv / std::conj(t) - std::conj(vv) / t + Complex(std::norm(v_j), 0.0);
    const Complex rhs = std::conj(y) * quad -
                        kImag * (branch.b_charge / 2.0) * (std::norm(v_i) / t2 + std::norm(v_j));
    const Complex lhs = branch_flow_from(v_i, v_j, branch) + branch_flow_to(v_i, v_j, branch);
    return lhs - rhs;
}

Complex voltage_drop_identity_residual_complex(Complex v_i, Complex v_j, const Branch& branch) {
    const Complex z(branch.r, branch.x);
    const Complex t = tap_complex(branch);
    const double t2 = std::norm(t);
    const Complex s_ij = branch_flow_from(v_i, v_j, branch);
    const Complex vv = v_i * std::conj(v_j);
    const Complex quad =
        std::norm(v_i) / t2 - vv / std::conj(t) - std::conj(vv) / t + Complex(std::norm(v_j), 0.0);
    const Complex lhs =
        (1.0 - z.imag() * branch.b_charge) * (std::norm(v_i) / t2) - std::norm(v_j);
    const Complex rhs = std::conj(z) * s_ij + z * std::conj(s_ij) - quad;
    return lhs - rhs;
}

double voltage_drop_identity_residual(Complex v_i, Complex v_j, const Branch& branch) {
    return voltage_drop_identity_residual_complex(v_i, v_j, branch).real();
}

Complex vv_product(double w_i, Complex s_ij, const Branch& branch) {
    const Complex y = admittance(branch);
    const Complex z(branch.r, branch.x);
    const Complex t = tap_complex(branch);
    const double t2 = std::norm(t);
    return std::conj(z) * std::conj(t) *
           ((std::conj(y) - kImag * (branch.b_charge / 2.0)) * (w_i / t2) - s_ij);
}

std::vector<Complex> kcl_residuals(const Network& network, const ACState& state) {
    const std::size_t nb = network.buses.size();
    if (state.voltages.v.size() != nb || state.bus_generation.size() != nb)
        throw ModelError("state does not match the network's bus count");
    if (state.flows.s.size() != FlowSet::arc_count(network))
        throw ModelError("flow set is missing arcs: expected " +
                         std::to_string(FlowSet::arc_count(network)) + ", have " +
                         std::to_string(state.flows.s.size()));

    std::vector<Complex> residual(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        const Bus& bus = network.buses[i];
        const Complex shunt(bus.shunt_g, bus.shunt_b);
        residual[i] = state.bus_generation[i] - Complex(bus.p_demand, bus.q_demand) -
                      std::conj(shunt) * std::norm(state.voltages.v[i]);
    }
    for (std::size_t b = 0; b < network.branches.size(); ++b) {
        const Branch& br = network.branches[b];
        residual[network.bus_index(br.from_bus)] -= state.flows.s[state.flows.from_arc(b)];
        residual[network.bus_index(br.to_bus)] -= state.flows.s[state.flows.to_arc(b)];
    }
    return residual;
}

namespace {

void check_upper(std::vector<BoundViolation>& out, const std::string& entity,
                 const std::string& bound, double value, double limit, double tol) {
    if (value > limit + tol) out.push_back({entity, bound, value, limit, value - limit});
}

void check_lower(std::vector<BoundViolation>& out, const std::string& entity,
                 const std::string& bound, double value, double limit, double tol) {
    if (value < limit - tol) out.push_back({entity, bound, value, limit, limit - value});
}

}  // namespace

std::vector<BoundViolation> operational_violations(const Network& network, const ACState& state,
                                                   double tol) {
    std::vector<BoundViolation> out;
    const std::size_t nb = network.buses.size();

    const int ref = network.reference_index();
    if (ref >= 0) {
        const double angle = std::arg(state.voltages.v[ref]);
        if (std::abs(angle) > tol)
            out.push_back({"bus " + std::to_string(network.buses[ref].id), "reference-angle",
                           angle, 0.0, std::abs(angle)});
    }

    for (std::size_t i = 0; i < nb; ++i) {
        const Bus& bus = network.buses[i];
        const std::string entity = "bus " + std::to_string(bus.id);
        const double v = std::abs(state.voltages.v[i]);
        check_upper(out, entity, "v_max", v, bus.v_max, tol);
        check_lower(out, entity, "v_min", v, bus.v_min, tol);
    }

    // Generator boxes, aggregated per bus: an in-box per-unit split exists
    // exactly when the bus total fits the summed box.
    for (std::size_t i = 0; i < nb; ++i) {
        const auto gens = network.generators_at(static_cast<int>(i));
        if (gens.empty()) continue;
        double p_min = 0, p_max = 0, q_min = 0, q_max = 0;
        for (int g : gens) {
            p_min += network.generators[g].p_min;
            p_max += network.generators[g].p_max;
            q_min += network.generators[g].q_min;
            q_max += network.generators[g].q_max;
        }
        const std::string entity = "bus " + std::to_string(network.buses[i].id) + " generation";
        check_upper(out, entity, "p_max", state.bus_generation[i].real(), p_max, tol);
        check_lower(out, entity, "p_min", state.bus_generation[i].real(), p_min, tol);
        check_upper(out, entity, "q_max", state.bus_generation[i].imag(), q_max, tol);
        check_lower(out, entity, "q_min", state.bus_generation[i].imag(), q_min, tol);
    }

    for (std::size_t b = 0; b < network.branches.size(); ++b) {
        const Branch& br = network.branches[b];
        const std::string entity = "branch " + std::to_string(b);
        if (br.has_rating()) {
            const double s_from = std::abs(state.flows.s[state.flows.from_arc(b)]);
            const double s_to = std::abs(state.flows.s[state.flows.to_arc(b)]);
            check_upper(out, entity + " from-side", "thermal", s_from, br.s_rating, tol);
            check_upper(out, entity + " to-side", "thermal", s_to, br.s_rating, tol);
        }
        // PAD on the four-quadrant angle of V_i V_j*, cross-checked against
        // the tangent form on its real/imaginary parts.
        const Complex vv = state.voltages.v[network.bus_index(br.from_bus)] *
                           std::conj(state.voltages.v[network.bus_index(br.to_bus)]);
        const double angle = std::atan2(vv.imag(), vv.real());
        const double limit = br.angle_limit;
        if (std::abs(angle) > limit + tol) {
            const double tan_lim = std::tan(limit);
            const bool linear_flags = vv.imag() > tan_lim * vv.real() + tol ||
                                      vv.imag() < -tan_lim * vv.real() - tol;
            BoundViolation v{entity, "pad", angle, limit, std::abs(angle) - limit};
            if (!linear_flags) v.bound = "pad (linear form disagrees)";
            out.push_back(v);
        }
    }
    return out;
}

std::vector<Complex> allocate_generation(const Network& network,
                                         const std::vector<Complex>& bus_generation) {
    std::vector<Complex> out(network.generators.size());
    for (std::size_t i = 0; i < network.buses.size(); ++i) {
        const auto gens = network.generators_at(static_cast<int>(i));
        if (gens.empty()) continue;
        double p_min = 0, p_range = 0, q_min = 0, q_range = 0;
        for (int g : gens) {
            p_min += network.generators[g].p_min;
            p_range += network.generators[g].p_max - network.generators[g].p_min;
            q_min += network.generators[g].q_min;
            q_range += network.generators[g].q_max - network.generators[g].q_min;
        }
        const double p_total = bus_generation[i].real();
        const double q_total = bus_generation[i].imag();
        const double p_frac = p_range > 0 ? (p_total - p_min) / p_range : 0.0;
        const double q_frac = q_range > 0 ? (q_total - q_min) / q_range : 0.0;
        const double p_extra = p_range > 0 ? 0.0 : (p_total - p_min) / gens.size();
        const double q_extra = q_range > 0 ? 0.0 : (q_total - q_min) / gens.size();
        for (int g : gens) {
            const Generator& gen = network.generators[g];
            out[g] = Complex(gen.p_min + p_frac * (gen.p_max - gen.p_min) + p_extra,
                             gen.q_min + q_frac * (gen.q_max - gen.q_min) + q_extra);
        }
    }
    return out;
}

double generation_cost(const Network& network, const std::vector<Complex>& bus_generation) {
    const auto per_gen = allocate_generation(network, bus_generation);
    double cost = 0.0;
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const Generator& gen = network.generators[g];
        const double p_mw = per_gen[g].real() * network.base_mva;
        cost += gen.c2 * p_mw * p_mw + gen.c1 * p_mw + gen.c0;
    }
    return cost;
}

PowerFlowControls PowerFlowControls::from_setpoints(const Network& network) {
    PowerFlowControls controls;
    controls.gens.reserve(network.generators.size());
    for (const Generator& gen : network.generators)
        controls.gens.push_back({gen.p_set, gen.v_set});
    return controls;
}

}  // namespace relaxflow
