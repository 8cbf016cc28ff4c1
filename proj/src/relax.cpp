#include "relaxflow/relax.hpp"

#include <cmath>
#include <numbers>

namespace relaxflow {

namespace {

const Complex kImag(0.0, 1.0);

std::string bus_tag(const Network& net, int bi) { return std::to_string(net.buses[bi].id); }

/// Accumulates (col, coeff) terms, merging duplicates and dropping zeros.
class RowBuilder {
public:
    RowBuilder& add(int col, double coeff) {
        if (coeff == 0.0) return *this;
        for (std::size_t k = 0; k < cols_.size(); ++k)
            if (cols_[k] == col) {
                vals_[k] += coeff;
                return *this;
            }
        cols_.push_back(col);
        vals_.push_back(coeff);
        return *this;
    }
    LinearRow done(double rhs, std::string label) {
        LinearRow row;
        row.cols = std::move(cols_);
        row.vals = std::move(vals_);
        row.rhs = rhs;
        row.label = std::move(label);
        return row;
    }

private:
    std::vector<int> cols_;
    std::vector<double> vals_;
};

/// Variables and rows shared by both relaxations.
struct CommonLayout {
    VariableMap map;
    ConeProgram prog;
};

CommonLayout start_layout(const Network& net, RelaxSpace space) {
    validate_or_throw(net);
    CommonLayout out;
    out.map.space = space;
    const int nbus = static_cast<int>(net.buses.size());
    const int nbr = static_cast<int>(net.branches.size());

    for (int i = 0; i < nbus; ++i) {
        const Bus& bus = net.buses[i];
        out.map.w.push_back(out.prog.add_variable("w[" + bus_tag(net, i) + "]",
                                                  bus.v_min * bus.v_min, bus.v_max * bus.v_max));
    }
    if (space == RelaxSpace::w_space) {
        for (int b = 0; b < nbr; ++b) {
            out.map.w_re.push_back(out.prog.add_variable("wr[" + std::to_string(b) + "]"));
            out.map.w_im.push_back(out.prog.add_variable("wi[" + std::to_string(b) + "]"));
        }
    } else {
        for (int b = 0; b < nbr; ++b) {
            out.map.l.push_back(out.prog.add_variable("l[" + std::to_string(b) + "]", 0.0, kInf));
            const double t2 = std::norm(tap_complex(net.branches[b]));
            if (t2 == 1.0) {
                // |T|^2 = 1: the scaled coordinate is w at the from bus itself.
                out.map.w_from_scaled.push_back(-1);
            } else {
                out.map.w_from_scaled.push_back(
                    out.prog.add_variable("wsc[" + std::to_string(b) + "]", 0.0, kInf));
            }
        }
    }
    for (int b = 0; b < nbr; ++b) {
        out.map.p.push_back(out.prog.add_variable("p[" + std::to_string(b) + ".fwd]"));
        out.map.q.push_back(out.prog.add_variable("q[" + std::to_string(b) + ".fwd]"));
    }
    for (int b = 0; b < nbr; ++b) {
        out.map.p.push_back(out.prog.add_variable("p[" + std::to_string(b) + ".rev]"));
        out.map.q.push_back(out.prog.add_variable("q[" + std::to_string(b) + ".rev]"));
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        out.map.pg.push_back(
            out.prog.add_variable("pg[" + std::to_string(g) + "]", gen.p_min, gen.p_max));
        out.map.qg.push_back(
            out.prog.add_variable("qg[" + std::to_string(g) + "]", gen.q_min, gen.q_max));
    }
    out.map.thermal_cap.assign(nbr, -1);
    for (int b = 0; b < nbr; ++b) {
        if (!net.branches[b].has_rating()) continue;
        const double cap = net.branches[b].s_rating;
        out.map.thermal_cap[b] =
            out.prog.add_variable("cap[" + std::to_string(b) + "]", cap, cap);
    }
    out.map.cost_epigraph.assign(net.generators.size(), -1);
    out.map.cost_scale.assign(net.generators.size(), -1);
    return out;
}

void emit_kcl(const Network& net, CommonLayout& cl) {
    const int nbus = static_cast<int>(net.buses.size());
    const int nbr = static_cast<int>(net.branches.size());
    std::vector<RowBuilder> prow(nbus), qrow(nbus);
    for (int i = 0; i < nbus; ++i) {
        const Bus& bus = net.buses[i];
        prow[i].add(cl.map.w[i], -bus.shunt_g);
        qrow[i].add(cl.map.w[i], bus.shunt_b);
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const int bi = net.bus_index(net.generators[g].bus);
        prow[bi].add(cl.map.pg[g], 1.0);
        qrow[bi].add(cl.map.qg[g], 1.0);
    }
    for (int b = 0; b < nbr; ++b) {
        const int i = net.bus_index(net.branches[b].from_bus);
        const int j = net.bus_index(net.branches[b].to_bus);
        prow[i].add(cl.map.p[b], -1.0);
        qrow[i].add(cl.map.q[b], -1.0);
        prow[j].add(cl.map.p[nbr + b], -1.0);
        qrow[j].add(cl.map.q[nbr + b], -1.0);
    }
    for (int i = 0; i < nbus; ++i) {
        const Bus& bus = net.buses[i];
        cl.prog.add_equality(prow[i].done(bus.p_demand, "kcl_p[" + bus_tag(net, i) + "]"));
        cl.prog.add_equality(qrow[i].done(bus.q_demand, "kcl_q[" + bus_tag(net, i) + "]"));
    }
}

void emit_thermal(const Network& net, CommonLayout& cl) {
    const int nbr = static_cast<int>(net.branches.size());
    for (int b = 0; b < nbr; ++b) {
        const int cap = cl.map.thermal_cap[b];
        if (cap < 0) continue;
        cl.prog.rsoc_blocks.push_back(
            {{cl.map.p[b], cl.map.q[b]}, cap, cap, "thermal[" + std::to_string(b) + ".fwd]"});
        cl.prog.rsoc_blocks.push_back({{cl.map.p[nbr + b], cl.map.q[nbr + b]},
                                       cap,
                                       cap,
                                       "thermal[" + std::to_string(b) + ".rev]"});
    }
}

void emit_objective(const Network& net, CommonLayout& cl, RelaxObjective objective) {
    if (objective == RelaxObjective::feasibility) return;
    const double base = net.base_mva;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        if (gen.c2 < 0.0)
            throw ModelError("generator " + std::to_string(g) + ": negative quadratic cost");
        const double lin = gen.c1 * base;
        cl.prog.objective[cl.map.pg[g]] += lin;
        cl.prog.objective_constant += gen.c0;
        if (gen.c2 > 0.0) {
            // Epigraph of pg^2 against a unit leg keeps the cone coordinates
            // O(1); the quadratic weight lives in the objective.
            const double quad = gen.c2 * base * base;
            const int epi =
                cl.prog.add_variable("cost2[" + std::to_string(g) + "]", 0.0, kInf);
            const int unit =
                cl.prog.add_variable("cost2unit[" + std::to_string(g) + "]", 1.0, 1.0);
            cl.prog.rsoc_blocks.push_back(
                {{cl.map.pg[g]}, epi, unit, "cost2[" + std::to_string(g) + "]"});
            cl.prog.objective[epi] += quad;
            cl.map.cost_epigraph[g] = epi;
            cl.map.cost_scale[g] = unit;
        }
    }
}

/// PAD rows from the linear representation re(...) and im(...) of the
/// voltage product on this branch. At a pi/2 limit the tangent family
/// degenerates; the feasible half-plane is re(...) >= 0.
void emit_pad(CommonLayout& cl, double angle_limit, int b,
              const std::vector<std::pair<int, double>>& re_terms,
              const std::vector<std::pair<int, double>>& im_terms) {
    const std::string tag = std::to_string(b);
    if (angle_limit >= std::numbers::pi / 2.0 - 1e-9) {
        RowBuilder row;
        for (const auto& [c, v] : re_terms) row.add(c, -v);
        cl.prog.add_inequality(row.done(0.0, "pad_re[" + tag + "]"));
        return;
    }
    const double tan_lim = std::tan(angle_limit);
    RowBuilder hi, lo;
    for (const auto& [c, v] : im_terms) hi.add(c, v);
    for (const auto& [c, v] : re_terms) hi.add(c, -tan_lim * v);
    for (const auto& [c, v] : im_terms) lo.add(c, -v);
    for (const auto& [c, v] : re_terms) lo.add(c, -tan_lim * v);
    cl.prog.add_inequality(hi.done(0.0, "pad_hi[" + tag + "]"));
    cl.prog.add_inequality(lo.done(0.0, "pad_lo[" + tag + "]"));
}

}  // namespace

// ---------------------------------------------------------------------------
// W-space builder
// ---------------------------------------------------------------------------

std::pair<ConeProgram, VariableMap> build_soc_e(const Network& net, RelaxObjective objective) {
    CommonLayout cl = start_layout(net, RelaxSpace::w_space);
    const int nbr = static_cast<int>(net.branches.size());

    emit_kcl(net, cl);
    for (int b = 0; b < nbr; ++b) {
        const Branch& br = net.branches[b];
        const int i = net.bus_index(br.from_bus);
        const int j = net.bus_index(br.to_bus);
        const Complex y = admittance(br);
        const Complex t = tap_complex(br);
        const double t2 = std::norm(t);
        const Complex a = (std::conj(y) - kImag * (br.b_charge / 2.0)) / t2;
        const Complex bf = std::conj(y) / std::conj(t);
        const Complex c = std::conj(y) - kImag * (br.b_charge / 2.0);
        const Complex d = std::conj(y) / t;
        const std::string tag = std::to_string(b);

        cl.prog.add_equality(RowBuilder()
                                 .add(cl.map.p[b], 1.0)
                                 .add(cl.map.w[i], -a.real())
                                 .add(cl.map.w_re[b], bf.real())
                                 .add(cl.map.w_im[b], -bf.imag())
                                 .done(0.0, "flow_from_re[" + tag + "]"));
        cl.prog.add_equality(RowBuilder()
                                 .add(cl.map.q[b], 1.0)
                                 .add(cl.map.w[i], -a.imag())
                                 .add(cl.map.w_re[b], bf.imag())
                                 .add(cl.map.w_im[b], bf.real())
                                 .done(0.0, "flow_from_im[" + tag + "]"));
        cl.prog.add_equality(RowBuilder()
                                 .add(cl.map.p[nbr + b], 1.0)
                                 .add(cl.map.w[j], -c.real())
                                 .add(cl.map.w_re[b], d.real())
                                 .add(cl.map.w_im[b], d.imag())
                                 .done(0.0, "flow_to_re[" + tag + "]"));
        cl.prog.add_equality(RowBuilder()
                                 .add(cl.map.q[nbr + b], 1.0)
                                 .add(cl.map.w[j], -c.imag())
                                 .add(cl.map.w_re[b], d.imag())
                                 .add(cl.map.w_im[b], -d.real())
                                 .done(0.0, "flow_to_im[" + tag + "]"));
    }
    for (int b = 0; b < nbr; ++b) {
        emit_pad(cl, net.branches[b].angle_limit, b,
                 {{cl.map.w_re[b], 1.0}}, {{cl.map.w_im[b], 1.0}});
    }
    for (int b = 0; b < nbr; ++b) {
        const int i = net.bus_index(net.branches[b].from_bus);
        const int j = net.bus_index(net.branches[b].to_bus);
        cl.prog.rsoc_blocks.push_back({{cl.map.w_re[b], cl.map.w_im[b]},
                                       cl.map.w[i],
                                       cl.map.w[j],
                                       "vv[" + std::to_string(b) + "]"});
    }
    emit_thermal(net, cl);
    emit_objective(net, cl, objective);
    cl.map.n_vars = cl.prog.n_vars;
    cl.prog.check_well_formed();
    return {std::move(cl.prog), std::move(cl.map)};
}

// ---------------------------------------------------------------------------
// L-space builders (complex-arithmetic route and real-shorthand route)
// ---------------------------------------------------------------------------

namespace {

/// Per-branch linear coefficients of the L-space rows. Conventions:
///   re(...) = re_w*w_i + re_p*p + re_q*q   (factored voltage product)
///   loss-P row:  p_f + p_t + lr_l*L + lr_q*q_f + lr_w*w_i = 0
///   loss-Q row:  q_f + q_t + li_l*L + li_q*q_f + li_w*w_i + li_wj*w_j = 0
///   drop row:    dr_w*w_i - w_j + dr_p*p_f + dr_q*q_f + dr_l*L = 0
struct CdfCoefficients {
    double re_w, re_p, re_q;
    double im_w, im_p, im_q;
    double lr_l, lr_q, lr_w;
    double li_l, li_q, li_w, li_wj;
    double dr_w, dr_p, dr_q, dr_l;
    double t2;
};

CdfCoefficients cdf_coefficients_complex(const Branch& br) {
    CdfCoefficients co;
    const Complex z(br.r, br.x);
    const Complex t = tap_complex(br);
    const double t2 = std::norm(t);
    const double half_b = br.b_charge / 2.0;
    const Complex zt = z * t;
    // Z* T* (Y* - i b/2) collapses to T* - i (b/2) (Z T)* through Y Z = 1.
    const Complex k_w = (std::conj(t) - kImag * half_b * std::conj(zt)) / t2;
    const Complex k_s = std::conj(zt);
    co.re_w = k_w.real();
    co.re_p = -k_s.real();
    co.re_q = k_s.imag();
    co.im_w = k_w.imag();
    co.im_p = -k_s.imag();
    co.im_q = -k_s.real();

    const Complex k_loss = (z * (half_b * half_b) - kImag * half_b) / t2;
    co.lr_l = -z.real();
    co.lr_q = -z.real() * br.b_charge;
    co.lr_w = -k_loss.real();
    co.li_l = -z.imag();
    co.li_q = -z.imag() * br.b_charge;
    co.li_w = -k_loss.imag();
    co.li_wj = half_b;

    co.dr_w = ((1.0 - z.imag() * br.b_charge) + std::norm(z) * half_b * half_b) / t2;
    co.dr_p = -2.0 * z.real();
    co.dr_q = -2.0 * z.imag() + std::norm(z) * br.b_charge;
    co.dr_l = std::norm(z);
    co.t2 = t2;
    return co;
}

CdfCoefficients cdf_coefficients_real(const Branch& br) {
    CdfCoefficients co;
    const auto [tz_r, tz_i] = tz_coefficients(br);
    const double t_r = br.tap * std::cos(br.shift);
    const double t_i = br.tap * std::sin(br.shift);
    const double t2 = br.tap * br.tap;
    const double half_b = br.b_charge / 2.0;
    const double r = br.r, x = br.x;
    const double z2 = r * r + x * x;

    co.re_w = (t_r - tz_i * half_b) / t2;
    co.re_p = -tz_r;
    co.re_q = -tz_i;
    co.im_w = (-t_i - tz_r * half_b) / t2;
    co.im_p = tz_i;
    co.im_q = -tz_r;

    co.lr_l = -r;
    co.lr_q = -r * br.b_charge;
    co.lr_w = -r * half_b * half_b / t2;
    co.li_l = -x;
    co.li_q = -x * br.b_charge;
    co.li_w = -(x * half_b * half_b - half_b) / t2;
    co.li_wj = half_b;

    co.dr_w = ((1.0 - x * br.b_charge) + z2 * half_b * half_b) / t2;
    co.dr_p = -2.0 * r;
    co.dr_q = -2.0 * x + z2 * br.b_charge;
    co.dr_l = z2;
    co.t2 = t2;
    return co;
}

template <typename CoefficientFn>
std::pair<ConeProgram, VariableMap> build_cdf_common(const Network& net,
                                                     RelaxObjective objective,
                                                     CoefficientFn&& coefficients) {
    CommonLayout cl = start_layout(net, RelaxSpace::l_space);
    const int nbr = static_cast<int>(net.branches.size());
    std::vector<CdfCoefficients> co;
    co.reserve(nbr);
    for (int b = 0; b < nbr; ++b) co.push_back(coefficients(net.branches[b]));

    emit_kcl(net, cl);
    for (int b = 0; b < nbr; ++b) {
        const Branch& br = net.branches[b];
        const int i = net.bus_index(br.from_bus);
        const int j = net.bus_index(br.to_bus);
        const std::string tag = std::to_string(b);
        cl.prog.add_equality(RowBuilder()
                                 .add(cl.map.p[b], 1.0)
                                 .add(cl.map.p[nbr + b], 1.0)
                                 .add(cl.map.l[b], co[b].lr_l)
                                 .add(cl.map.q[b], co[b].lr_q)
                                 .add(cl.map.w[i], co[b].lr_w)
                                 .done(0.0, "loss_p[" + tag + "]"));
        cl.prog.add_equality(RowBuilder()
                                 .add(cl.map.q[b], 1.0 + co[b].li_q)
                                 .add(cl.map.q[nbr + b], 1.0)
                                 .add(cl.map.l[b], co[b].li_l)
                                 .add(cl.map.w[i], co[b].li_w)
                                 .add(cl.map.w[j], co[b].li_wj)
                                 .done(0.0, "loss_q[" + tag + "]"));
        cl.prog.add_equality(RowBuilder()
                                 .add(cl.map.w[i], co[b].dr_w)
                                 .add(cl.map.w[j], -1.0)
                                 .add(cl.map.p[b], co[b].dr_p)
                                 .add(cl.map.q[b], co[b].dr_q)
                                 .add(cl.map.l[b], co[b].dr_l)
                                 .done(0.0, "drop[" + tag + "]"));
        if (cl.map.w_from_scaled[b] >= 0) {
            cl.prog.add_equality(RowBuilder()
                                     .add(cl.map.w_from_scaled[b], 1.0)
                                     .add(cl.map.w[i], -1.0 / co[b].t2)
                                     .done(0.0, "wsc_def[" + tag + "]"));
        }
    }
    for (int b = 0; b < nbr; ++b) {
        emit_pad(cl, net.branches[b].angle_limit, b,
                 {{cl.map.w[net.bus_index(net.branches[b].from_bus)], co[b].re_w},
                  {cl.map.p[b], co[b].re_p},
                  {cl.map.q[b], co[b].re_q}},
                 {{cl.map.w[net.bus_index(net.branches[b].from_bus)], co[b].im_w},
                  {cl.map.p[b], co[b].im_p},
                  {cl.map.q[b], co[b].im_q}});
    }
    for (int b = 0; b < nbr; ++b) {
        const int i = net.bus_index(net.branches[b].from_bus);
        const int scaled = cl.map.w_from_scaled[b] >= 0 ? cl.map.w_from_scaled[b] : cl.map.w[i];
        cl.prog.rsoc_blocks.push_back({{cl.map.p[b], cl.map.q[b]},
                                       scaled,
                                       cl.map.l[b],
                                       "flowcone[" + std::to_string(b) + "]"});
    }
    emit_thermal(net, cl);
    emit_objective(net, cl, objective);
    cl.map.n_vars = cl.prog.n_vars;
    cl.prog.check_well_formed();
    return {std::move(cl.prog), std::move(cl.map)};
}

}  // namespace

std::pair<ConeProgram, VariableMap> build_cdf_e(const Network& net, RelaxObjective objective) {
    return build_cdf_common(net, objective, cdf_coefficients_complex);
}

std::pair<ConeProgram, VariableMap> build_cdf_e_real(const Network& net,
                                                     RelaxObjective objective) {
    return build_cdf_common(net, objective, cdf_coefficients_real);
}

// ---------------------------------------------------------------------------
// Lifts and point plumbing
// ---------------------------------------------------------------------------

RelaxPoint lift_ac_solution(const Network& net, const ACState& state, RelaxSpace space) {
    const int nbus = static_cast<int>(net.buses.size());
    const int nbr = static_cast<int>(net.branches.size());
    if (static_cast<int>(state.voltages.v.size()) != nbus ||
        state.flows.s.size() != FlowSet::arc_count(net))
        throw ModelError("state does not match the network");

    RelaxPoint pt;
    pt.space = space;
    pt.w.resize(nbus);
    for (int i = 0; i < nbus; ++i) pt.w[i] = std::norm(state.voltages.v[i]);
    pt.s = state.flows.s;
    pt.sg = allocate_generation(net, state.bus_generation);
    if (space == RelaxSpace::w_space) {
        pt.w_branch.resize(nbr);
        for (int b = 0; b < nbr; ++b) {
            const Complex vi = state.voltages.v[net.bus_index(net.branches[b].from_bus)];
            const Complex vj = state.voltages.v[net.bus_index(net.branches[b].to_bus)];
            pt.w_branch[b] = vi * std::conj(vj);
        }
    } else {
        pt.l.resize(nbr);
        for (int b = 0; b < nbr; ++b) {
            const Complex vi = state.voltages.v[net.bus_index(net.branches[b].from_bus)];
            const Complex vj = state.voltages.v[net.bus_index(net.branches[b].to_bus)];
            pt.l[b] = abs_sq_current_rhs(vi, vj, state.flows.s[b], net.branches[b]);
        }
    }
    return pt;
}

RelaxPoint extract_point(const VariableMap& map, std::span<const double> x) {
    if (static_cast<int>(x.size()) != map.n_vars)
        throw ModelError("point has wrong dimension for this variable map");
    RelaxPoint pt;
    pt.space = map.space;
    pt.w.reserve(map.w.size());
    for (int idx : map.w) pt.w.push_back(x[idx]);
    if (map.space == RelaxSpace::w_space) {
        for (std::size_t b = 0; b < map.w_re.size(); ++b)
            pt.w_branch.push_back(Complex(x[map.w_re[b]], x[map.w_im[b]]));
    } else {
        for (int idx : map.l) pt.l.push_back(x[idx]);
    }
    for (std::size_t a = 0; a < map.p.size(); ++a)
        pt.s.push_back(Complex(x[map.p[a]], x[map.q[a]]));
    for (std::size_t g = 0; g < map.pg.size(); ++g)
        pt.sg.push_back(Complex(x[map.pg[g]], x[map.qg[g]]));
    return pt;
}

std::vector<double> embed_point(const Network& net, const VariableMap& map,
                                const RelaxPoint& point) {
    if (point.space != map.space) throw ModelError("point space does not match the map");
    std::vector<double> x(map.n_vars, 0.0);
    for (std::size_t i = 0; i < map.w.size(); ++i) x[map.w[i]] = point.w[i];
    if (map.space == RelaxSpace::w_space) {
        for (std::size_t b = 0; b < map.w_re.size(); ++b) {
            x[map.w_re[b]] = point.w_branch[b].real();
            x[map.w_im[b]] = point.w_branch[b].imag();
        }
    } else {
        for (std::size_t b = 0; b < map.l.size(); ++b) {
            x[map.l[b]] = point.l[b];
            if (map.w_from_scaled[b] >= 0) {
                const int i = net.bus_index(net.branches[b].from_bus);
                x[map.w_from_scaled[b]] =
                    point.w[i] / std::norm(tap_complex(net.branches[b]));
            }
        }
    }
    for (std::size_t a = 0; a < map.p.size(); ++a) {
        x[map.p[a]] = point.s[a].real();
        x[map.q[a]] = point.s[a].imag();
    }
    for (std::size_t g = 0; g < map.pg.size(); ++g) {
        x[map.pg[g]] = point.sg[g].real();
        x[map.qg[g]] = point.sg[g].imag();
    }
    for (std::size_t b = 0; b < map.thermal_cap.size(); ++b)
        if (map.thermal_cap[b] >= 0) x[map.thermal_cap[b]] = net.branches[b].s_rating;
    for (std::size_t g = 0; g < map.cost_epigraph.size(); ++g) {
        if (map.cost_epigraph[g] < 0) continue;
        x[map.cost_epigraph[g]] = point.sg[g].real() * point.sg[g].real();
        x[map.cost_scale[g]] = 1.0;
    }
    return x;
}

double point_cost(const Network& net, const RelaxPoint& point) {
    double cost = 0.0;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        const double p_mw = point.sg[g].real() * net.base_mva;
        cost += gen.c2 * p_mw * p_mw + gen.c1 * p_mw + gen.c0;
    }
    return cost;
}

}  // namespace relaxflow
