#include <Eigen/Dense>
#include <cmath>

#include "relaxflow/acpf.hpp"

namespace relaxflow {

namespace {

/// Both arc flows share the shape S = alpha*v_a^2 - beta*v_a*v_b*e^{i(th_a-th_b)}:
/// from side with (a,b) = (i,j), to side with (a,b) = (j,i).
struct ArcCoefficients {
    int a;  ///< owner bus index (the arc's KCL row)
    int b;
    Complex alpha;
    Complex beta;
};

struct ArcEval {
    double p, q;
    double dp_dtha, dp_dthb, dp_dva, dp_dvb;
    double dq_dtha, dq_dthb, dq_dva, dq_dvb;
};

ArcEval eval_arc(const ArcCoefficients& c, double v_a, double v_b, double th_a, double th_b) {
    const double delta = th_a - th_b;
    const double cs = std::cos(delta);
    const double sn = std::sin(delta);
    const double re = c.beta.real() * cs - c.beta.imag() * sn;  // Re(beta e^{i delta})
    const double im = c.beta.real() * sn + c.beta.imag() * cs;
    ArcEval e;
    e.p = c.alpha.real() * v_a * v_a - v_a * v_b * re;
    e.q = c.alpha.imag() * v_a * v_a - v_a * v_b * im;
    e.dp_dtha = v_a * v_b * im;
    e.dp_dthb = -e.dp_dtha;
    e.dq_dtha = -v_a * v_b * re;
    e.dq_dthb = -e.dq_dtha;
    e.dp_dva = 2.0 * c.alpha.real() * v_a - v_b * re;
    e.dp_dvb = -v_a * re;
    e.dq_dva = 2.0 * c.alpha.imag() * v_a - v_b * im;
    e.dq_dvb = -v_a * im;
    return e;
}

}  // namespace

ACState newton_solve(const Network& network, const PowerFlowControls& controls,
                     const NewtonOptions& opts) {
    validate_or_throw(network);
    if (controls.gens.size() != network.generators.size())
        throw ModelError("controls do not match the generator list");

    const int nb = static_cast<int>(network.buses.size());
    const int ref = network.reference_index();

    // Classification: reference bus is slack; any other bus with a generator
    // holds |V| and P; the rest hold P and Q.
    std::vector<bool> has_gen(nb, false);
    std::vector<double> p_sched(nb, 0.0), q_sched(nb, 0.0), v_fixed(nb, 0.0);
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const int bi = network.bus_index(network.generators[g].bus);
        if (!has_gen[bi]) v_fixed[bi] = controls.gens[g].v_set;
        has_gen[bi] = true;
        p_sched[bi] += controls.gens[g].p_set;
    }
    for (int i = 0; i < nb; ++i) {
        p_sched[i] -= network.buses[i].p_demand;
        q_sched[i] -= network.buses[i].q_demand;
    }

    std::vector<bool> is_pq(nb);
    for (int i = 0; i < nb; ++i) is_pq[i] = (i != ref) && !has_gen[i];

    // Unknown layout: theta for every non-reference bus, then v for PQ buses.
    std::vector<int> th_index(nb, -1), v_index(nb, -1);
    int nth = 0;
    for (int i = 0; i < nb; ++i)
        if (i != ref) th_index[i] = nth++;
    int nv = 0;
    for (int i = 0; i < nb; ++i)
        if (is_pq[i]) v_index[i] = nth + nv++;
    const int n_unknowns = nth + nv;

    // Flat start.
    std::vector<double> theta(nb, 0.0), vmag(nb, 1.0);
    for (int i = 0; i < nb; ++i)
        if (i == ref || has_gen[i]) vmag[i] = v_fixed[i] > 0.0 ? v_fixed[i] : 1.0;

    const int nbr = static_cast<int>(network.branches.size());
    std::vector<ArcCoefficients> arcs;
    arcs.reserve(2 * nbr);
    for (const Branch& br : network.branches) {
        const Complex y = admittance(br);
        const Complex t = tap_complex(br);
        const double t2 = std::norm(t);
        const Complex charge = Complex(0.0, br.b_charge / 2.0);
        const int i = network.bus_index(br.from_bus);
        const int j = network.bus_index(br.to_bus);
        arcs.push_back({i, j, (std::conj(y) - charge) / t2, std::conj(y) / std::conj(t)});
        arcs.push_back({j, i, std::conj(y) - charge, std::conj(y) / t});
    }

    // Mismatch rows: P for non-reference buses, Q for PQ buses.
    auto mismatch_and_jacobian = [&](Eigen::VectorXd& f, Eigen::MatrixXd* jac) {
        std::vector<double> p_calc(nb, 0.0), q_calc(nb, 0.0);
        if (jac) jac->setZero();
        for (int i = 0; i < nb; ++i) {
            const Bus& bus = network.buses[i];
            p_calc[i] += bus.shunt_g * vmag[i] * vmag[i];
            q_calc[i] -= bus.shunt_b * vmag[i] * vmag[i];
        }
        auto add = [&](int row, int col, double val) {
            if (jac && row >= 0 && col >= 0) (*jac)(row, col) += val;
        };
        for (const ArcCoefficients& arc : arcs) {
            const ArcEval e = eval_arc(arc, vmag[arc.a], vmag[arc.b], theta[arc.a], theta[arc.b]);
            p_calc[arc.a] += e.p;
            q_calc[arc.a] += e.q;
            if (!jac) continue;
            const int prow = th_index[arc.a];  // P row id equals theta index layout
            const int qrow = is_pq[arc.a] ? v_index[arc.a] : -1;
            add(prow, th_index[arc.a], e.dp_dtha);
            add(prow, th_index[arc.b], e.dp_dthb);
            add(prow, v_index[arc.a], e.dp_dva);
            add(prow, v_index[arc.b], e.dp_dvb);
            add(qrow, th_index[arc.a], e.dq_dtha);
            add(qrow, th_index[arc.b], e.dq_dthb);
            add(qrow, v_index[arc.a], e.dq_dva);
            add(qrow, v_index[arc.b], e.dq_dvb);
        }
        if (jac) {
            for (int i = 0; i < nb; ++i) {
                if (v_index[i] < 0) continue;
                const Bus& bus = network.buses[i];
                add(th_index[i], v_index[i], 2.0 * bus.shunt_g * vmag[i]);
                add(v_index[i], v_index[i], -2.0 * bus.shunt_b * vmag[i]);
            }
        }
        for (int i = 0; i < nb; ++i) {
            if (th_index[i] >= 0) f(th_index[i]) = p_sched[i] - p_calc[i];
            if (v_index[i] >= 0) f(v_index[i]) = q_sched[i] - q_calc[i];
        }
    };

    std::vector<double> trace;
    Eigen::VectorXd f(n_unknowns);
    Eigen::MatrixXd jac(n_unknowns, n_unknowns);
    for (int iter = 0;; ++iter) {
        mismatch_and_jacobian(f, nullptr);
        const double worst = n_unknowns > 0 ? f.cwiseAbs().maxCoeff() : 0.0;
        trace.push_back(worst);
        if (!std::isfinite(worst)) throw SolveError("power flow diverged (non-finite mismatch)", trace);
        if (worst < opts.tol) break;
        if (iter >= opts.max_iter)
            throw SolveError("power flow did not converge in " + std::to_string(opts.max_iter) +
                                 " iterations (worst mismatch " + std::to_string(worst) + ")",
                             trace);
        if (worst > 1e8) throw SolveError("power flow diverged", trace);

        mismatch_and_jacobian(f, &jac);
        // f = sched - calc, so Newton solves (d calc/d u) du = f.
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) throw SolveError("singular power flow Jacobian", trace);
        const Eigen::VectorXd du = lu.solve(f);
        if (!du.allFinite()) throw SolveError("singular power flow Jacobian", trace);
        for (int i = 0; i < nb; ++i) {
            if (th_index[i] >= 0) theta[i] += du(th_index[i]);
            if (v_index[i] >= 0) vmag[i] += du(v_index[i]);
        }
    }

    ACState state;
    state.voltages.v.resize(nb);
    for (int i = 0; i < nb; ++i) state.voltages.v[i] = std::polar(vmag[i], theta[i]);
    state.flows.s.resize(2 * nbr);
    for (int b = 0; b < nbr; ++b) {
        const Branch& br = network.branches[b];
        const Complex vi = state.voltages.v[network.bus_index(br.from_bus)];
        const Complex vj = state.voltages.v[network.bus_index(br.to_bus)];
        state.flows.s[b] = branch_flow_from(vi, vj, br);
        state.flows.s[nbr + b] = branch_flow_to(vi, vj, br);
    }
    // Bus generation balances KCL exactly at generator buses.
    state.bus_generation.assign(nb, Complex(0.0, 0.0));
    std::vector<Complex> calc(nb, Complex(0.0, 0.0));
    for (int b = 0; b < nbr; ++b) {
        const Branch& br = network.branches[b];
        calc[network.bus_index(br.from_bus)] += state.flows.s[b];
        calc[network.bus_index(br.to_bus)] += state.flows.s[nbr + b];
    }
    for (int i = 0; i < nb; ++i) {
        const Bus& bus = network.buses[i];
        calc[i] += Complex(bus.shunt_g, -bus.shunt_b) * std::norm(state.voltages.v[i]);
        if (has_gen[i] || i == ref)
            state.bus_generation[i] = calc[i] + Complex(bus.p_demand, bus.q_demand);
    }
    return state;
}

}  // namespace relaxflow
