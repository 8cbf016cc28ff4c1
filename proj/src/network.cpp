#include "relaxflow/network.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace relaxflow {

int Network::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

int Network::reference_index() const {
    int found = -1;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (!buses[i].is_reference) continue;
        if (found >= 0) return -1;
        found = static_cast<int>(i);
    }
    return found;
}

std::vector<int> Network::generators_at(int bi) const {
    std::vector<int> out;
    if (bi < 0 || bi >= static_cast<int>(buses.size())) return out;
    const int id = buses[bi].id;
    for (std::size_t g = 0; g < generators.size(); ++g)
        if (generators[g].bus == id) out.push_back(static_cast<int>(g));
    return out;
}

Complex admittance(const Branch& branch) {
    if (branch.r == 0.0 && branch.x == 0.0)
        throw ModelError("branch impedance is zero; admittance undefined");
    return 1.0 / Complex(branch.r, branch.x);
}

Complex tap_complex(const Branch& branch) {
    return std::polar(branch.tap, branch.shift);
}

std::pair<double, double> tz_coefficients(const Branch& branch) {
    const Complex t = tap_complex(branch);
    const double tr = t.real();
    const double ti = t.imag();
    return {branch.r * tr - branch.x * ti, branch.r * ti + branch.x * tr};
}

std::string to_string(const Violation& v) {
    std::string s = v.entity + ": " + v.rule;
    if (!v.detail.empty()) s += " (" + v.detail + ")";
    return s;
}

namespace {

bool finite(double x) { return std::isfinite(x); }

std::string num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace

std::vector<Violation> validate(const Network& network) {
    std::vector<Violation> out;

    if (!finite(network.base_mva) || network.base_mva <= 0.0)
        out.push_back({"network", "base-mva-positive", "base_mva = " + num(network.base_mva)});

    std::set<int> ids;
    int reference_count = 0;
    for (std::size_t i = 0; i < network.buses.size(); ++i) {
        const Bus& bus = network.buses[i];
        const std::string entity = "bus " + std::to_string(bus.id);
        if (!ids.insert(bus.id).second)
            out.push_back({entity, "bus-id-unique", "duplicate id"});
        if (!finite(bus.v_min) || !finite(bus.v_max) || bus.v_min <= 0.0 || bus.v_min > bus.v_max)
            out.push_back({entity, "voltage-bounds-ordered",
                           "need 0 < v_min <= v_max, got [" + num(bus.v_min) + ", " + num(bus.v_max) + "]"});
        if (!finite(bus.shunt_g) || !finite(bus.shunt_b) || !finite(bus.p_demand) || !finite(bus.q_demand))
            out.push_back({entity, "finite-values", "non-finite shunt or demand"});
        if (bus.is_reference) ++reference_count;
    }
    if (network.buses.empty())
        out.push_back({"network", "nonempty", "no buses"});
    else if (reference_count != 1)
        out.push_back({"network", "reference-uniqueness",
                       "expected exactly one reference bus, found " + std::to_string(reference_count)});

    for (std::size_t b = 0; b < network.branches.size(); ++b) {
        const Branch& br = network.branches[b];
        const std::string entity = "branch " + std::to_string(b);
        if (br.r == 0.0 && br.x == 0.0)
            out.push_back({entity, "impedance-invertible", "r = x = 0"});
        if (!finite(br.r) || !finite(br.x) || !finite(br.b_charge) || !finite(br.s_rating))
            out.push_back({entity, "finite-values", "non-finite parameter"});
        if (!finite(br.tap) || br.tap <= 0.0)
            out.push_back({entity, "tap-positive", "tap = " + num(br.tap)});
        if (!finite(br.shift))
            out.push_back({entity, "finite-values", "non-finite shift"});
        if (!finite(br.angle_limit) || br.angle_limit < 0.0 ||
            br.angle_limit > std::numbers::pi / 2.0 + 1e-12)
            out.push_back({entity, "angle-limit-range",
                           "need 0 <= angle_limit <= pi/2, got " + num(br.angle_limit)});
        if (network.bus_index(br.from_bus) < 0)
            out.push_back({entity, "endpoint-exists", "unknown from_bus " + std::to_string(br.from_bus)});
        if (network.bus_index(br.to_bus) < 0)
            out.push_back({entity, "endpoint-exists", "unknown to_bus " + std::to_string(br.to_bus)});
    }

    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const Generator& gen = network.generators[g];
        const std::string entity = "generator " + std::to_string(g);
        if (network.bus_index(gen.bus) < 0)
            out.push_back({entity, "bus-exists", "unknown bus " + std::to_string(gen.bus)});
        if (!finite(gen.p_min) || !finite(gen.p_max) || gen.p_min > gen.p_max)
            out.push_back({entity, "active-box-ordered",
                           "[" + num(gen.p_min) + ", " + num(gen.p_max) + "]"});
        if (!finite(gen.q_min) || !finite(gen.q_max) || gen.q_min > gen.q_max)
            out.push_back({entity, "reactive-box-ordered",
                           "[" + num(gen.q_min) + ", " + num(gen.q_max) + "]"});
        if (!finite(gen.c0) || !finite(gen.c1) || !finite(gen.c2) || !finite(gen.p_set) ||
            !finite(gen.q_set) || !finite(gen.v_set) || gen.v_set <= 0.0)
            out.push_back({entity, "finite-values", "non-finite cost or setpoint"});
    }

    return out;
}

void validate_or_throw(const Network& network) {
    const auto violations = validate(network);
    if (violations.empty()) return;
    std::string msg = "invalid network:";
    for (const auto& v : violations) msg += "\n  " + to_string(v);
    throw ModelError(msg);
}

Network degenerate_copy(const Network& network) {
    Network out = network;
    for (auto& bus : out.buses) {
        bus.shunt_g = 0.0;
        bus.shunt_b = 0.0;
    }
    for (auto& br : out.branches) {
        br.b_charge = 0.0;
        br.tap = 1.0;
        br.shift = 0.0;
    }
    return out;
}

}  // namespace relaxflow
