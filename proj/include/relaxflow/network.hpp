#pragma once

#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "relaxflow/errors.hpp"

namespace relaxflow {

/// All complex electrical quantities (V, S, Y, Z, T, W) are plain
/// std::complex<double> in per-unit.
using Complex = std::complex<double>;

/// Symmetric phase-angle-difference limit used when a case file does not
/// constrain the angle. Stays strictly inside (-pi/2, pi/2).
inline constexpr double kDefaultAngleLimit = std::numbers::pi / 3.0;

struct Bus {
    int id = 0;
    double v_min = 0.9;  ///< p.u., must satisfy 0 < v_min <= v_max
    double v_max = 1.1;
    double shunt_g = 0.0;  ///< bus shunt Y^s = shunt_g + i*shunt_b, p.u.
    double shunt_b = 0.0;
    double p_demand = 0.0;  ///< p.u.
    double q_demand = 0.0;
    bool is_reference = false;
};

struct Generator {
    int bus = 0;
    double p_min = 0.0;  ///< active/reactive output box, p.u.
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    // Cost of operating at p MW: c2*p^2 + c1*p + c0.
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    // Dispatch setpoints (p.u. except v_set) used to drive the power flow.
    double p_set = 0.0;
    double q_set = 0.0;
    double v_set = 1.0;
};

/// One directed arc of E. The reverse arcs E^R are implied, never stored.
struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;  ///< series impedance Z = r + i*x; (r, x) != (0, 0)
    double x = 0.0;
    double b_charge = 0.0;  ///< TOTAL line charging; each side gets half
    double tap = 1.0;       ///< transformer magnitude t > 0
    double shift = 0.0;     ///< transformer angle, radians
    double s_rating = 0.0;  ///< apparent-power limit, p.u.; <= 0 means none
    double angle_limit = kDefaultAngleLimit;  ///< radians, in [0, pi/2]

    bool has_rating() const { return s_rating > 0.0; }
};

struct Network {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;

    /// Index of the bus with the given external id, or -1.
    int bus_index(int id) const;
    /// Index of the reference bus, or -1 when absent/ambiguous.
    int reference_index() const;
    /// Generator indices attached to bus index `bi`, in list order.
    std::vector<int> generators_at(int bi) const;
};

/// Series admittance Y = 1/Z. Throws ModelError on r = x = 0.
Complex admittance(const Branch& branch);

/// Complex tap ratio T = tap * e^{i*shift}. Requires tap > 0.
Complex tap_complex(const Branch& branch);

/// Real/imaginary parts of Z*T, i.e. (r*tR - x*tI, r*tI + x*tR).
std::pair<double, double> tz_coefficients(const Branch& branch);

/// A broken invariant found by validate(). Violations are data, not errors.
struct Violation {
    std::string entity;  ///< e.g. "bus 4", "branch 2", "generator 0"
    std::string rule;    ///< short stable name, e.g. "reference-uniqueness"
    std::string detail;
};

std::string to_string(const Violation& v);

/// Checks every type invariant; empty list iff the network is well formed.
std::vector<Violation> validate(const Network& network);

/// Convenience: validate and throw ModelError listing all violations.
void validate_or_throw(const Network& network);

/// Returns a copy with b_charge = 0, shunts = 0 and T = 1 on every element,
/// which reduces all extended equations to their plain forms.
Network degenerate_copy(const Network& network);

}  // namespace relaxflow
