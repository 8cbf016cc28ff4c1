#include "relaxflow/bijection.hpp"

#include <cmath>

#include "relaxflow/rng.hpp"

namespace relaxflow {

namespace {

const Complex kImag(0.0, 1.0);

}  // namespace

RelaxPoint cdf_to_soc(const Network& net, const RelaxPoint& point) {
    if (point.space != RelaxSpace::l_space)
        throw ModelError("cdf_to_soc expects an L-space point");
    const std::size_t nbr = net.branches.size();
    if (point.l.size() != nbr || point.w.size() != net.buses.size() ||
        point.s.size() != 2 * nbr)
        throw ModelError("point is missing coordinates for this network");

    RelaxPoint out;
    out.space = RelaxSpace::w_space;
    out.w = point.w;
    out.s = point.s;
    out.sg = point.sg;
    out.w_branch.resize(nbr);
    for (std::size_t b = 0; b < nbr; ++b) {
        const int i = net.bus_index(net.branches[b].from_bus);
        out.w_branch[b] = vv_product(point.w[i], point.s[b], net.branches[b]);
    }
    return out;
}

RelaxPoint soc_to_cdf(const Network& net, const RelaxPoint& point) {
    if (point.space != RelaxSpace::w_space)
        throw ModelError("soc_to_cdf expects a W-space point");
    const std::size_t nbr = net.branches.size();
    if (point.w_branch.size() != nbr || point.w.size() != net.buses.size() ||
        point.s.size() != 2 * nbr)
        throw ModelError("point is missing coordinates for this network");

    RelaxPoint out;
    out.space = RelaxSpace::l_space;
    out.w = point.w;
    out.s = point.s;
    out.sg = point.sg;
    out.l.resize(nbr);
    for (std::size_t b = 0; b < nbr; ++b) {
        const Branch& br = net.branches[b];
        const int i = net.bus_index(br.from_bus);
        const int j = net.bus_index(br.to_bus);
        const Complex y = admittance(br);
        const Complex t = tap_complex(br);
        const double t2 = std::norm(t);
        const double half_b = br.b_charge / 2.0;
        const Complex w_ij = point.w_branch[b];
        const Complex quad = point.w[i] / t2 - w_ij / std::conj(t) - std::conj(w_ij) / t +
                             Complex(point.w[j], 0.0);
        out.l[b] = std::norm(y) * quad.real() - half_b * half_b * point.w[i] / t2 -
                   br.b_charge * point.s[b].imag();
    }
    return out;
}

std::vector<Complex> combined_property_residual(const Network& net, const RelaxPoint& point) {
    if (point.space != RelaxSpace::l_space)
        throw ModelError("combined_property_residual expects an L-space point");
    std::vector<Complex> out(net.branches.size());
    for (std::size_t b = 0; b < net.branches.size(); ++b) {
        const Branch& br = net.branches[b];
        const Complex z(br.r, br.x);
        const double t2 = std::norm(tap_complex(br));
        const int i = net.bus_index(br.from_bus);
        const int j = net.bus_index(br.to_bus);
        const Complex s_ij = point.s[b];
        const Complex s_ji = point.s[net.branches.size() + b];
        const Complex rhs = point.w[i] / t2 - point.w[j] + std::conj(z) * s_ji +
                            kImag * (br.b_charge / 2.0) *
                                (z * (point.w[i] / t2) + std::conj(z) * point.w[j]);
        out[b] = z * std::conj(s_ij) - rhs;
    }
    return out;
}

namespace {

std::string family_of(const std::string& label) {
    if (label.rfind("lb ", 0) == 0 || label.rfind("ub ", 0) == 0) return "bounds";
    const auto bracket = label.find('[');
    return bracket == std::string::npos ? label : label.substr(0, bracket);
}

struct DirectionStats {
    int solved = 0;
    int rejected = 0;
    int failures = 0;
    double worst_source = 0.0;
    double worst_mapped = 0.0;
    double worst_round_trip = 0.0;
    std::map<std::string, double> family_worst;
};

}  // namespace

VerifyReport verify_equivalence(const Network& net, const EquivalenceOptions& opts) {
    auto [cdf_prog, cdf_map] = build_cdf_e(net, RelaxObjective::feasibility);
    auto [soc_prog, soc_map] = build_soc_e(net, RelaxObjective::feasibility);

    VerifyReport report;
    report.tol = opts.tol;
    DirectionStats forward, backward;  // cdf->soc and soc->cdf

    auto run_direction = [&](bool from_cdf, DirectionStats& stats, std::uint64_t stream_base) {
        ConeProgram& src_prog = from_cdf ? cdf_prog : soc_prog;
        const VariableMap& src_map = from_cdf ? cdf_map : soc_map;
        const ConeProgram& dst_prog = from_cdf ? soc_prog : cdf_prog;
        const VariableMap& dst_map = from_cdf ? soc_map : cdf_map;

        for (int sample = 0; sample < opts.samples; ++sample) {
            Rng rng = Rng::stream(opts.seed, stream_base + 2 * sample);
            // Random linear objective over the shared (W, S) coordinates.
            std::fill(src_prog.objective.begin(), src_prog.objective.end(), 0.0);
            for (int idx : src_map.w) src_prog.objective[idx] = rng.uniform(-1.0, 1.0);
            for (int idx : src_map.p) src_prog.objective[idx] = rng.uniform(-1.0, 1.0);
            for (int idx : src_map.q) src_prog.objective[idx] = rng.uniform(-1.0, 1.0);

            SolveOptions sopts;
            sopts.tol = std::min(1e-8, opts.tol);
            const Solution sol = solve(src_prog, sopts);
            if (sol.status != SolveStatus::optimal) {
                ++stats.failures;
                continue;
            }
            const VerifyReport source_check = check_point(src_prog, sol.x, opts.tol);
            stats.worst_source = std::max(stats.worst_source, source_check.worst);
            if (!source_check.pass) {
                ++stats.rejected;
                continue;
            }
            ++stats.solved;

            RelaxPoint src_pt = extract_point(src_map, sol.x);
            RelaxPoint mapped = from_cdf ? cdf_to_soc(net, src_pt) : soc_to_cdf(net, src_pt);
            if (opts.corrupt != 0.0 && sample == 0 && !mapped.w.empty())
                mapped.w[0] += opts.corrupt;
            const std::vector<double> embedded = embed_point(net, dst_map, mapped);
            const VerifyReport mapped_check = check_point(dst_prog, embedded, opts.tol);
            for (const auto& entry : mapped_check.entries) {
                const double normalized = entry.residual / entry.scale;
                auto& worst = stats.family_worst[family_of(entry.label)];
                worst = std::max(worst, normalized);
            }
            stats.worst_mapped = std::max(stats.worst_mapped, mapped_check.worst);

            // Round trip restores the derived coordinate.
            const RelaxPoint back = from_cdf ? soc_to_cdf(net, mapped) : cdf_to_soc(net, mapped);
            double rt = 0.0;
            if (from_cdf) {
                for (std::size_t b = 0; b < src_pt.l.size(); ++b)
                    rt = std::max(rt, std::abs(back.l[b] - src_pt.l[b]) /
                                          std::max(1.0, std::abs(src_pt.l[b])));
            } else {
                for (std::size_t b = 0; b < src_pt.w_branch.size(); ++b)
                    rt = std::max(rt, std::abs(back.w_branch[b] - src_pt.w_branch[b]) /
                                          std::max(1.0, std::abs(src_pt.w_branch[b])));
            }
            stats.worst_round_trip = std::max(stats.worst_round_trip, rt);
        }
    };

    run_direction(true, forward, 1);
    run_direction(false, backward, 10007);

    auto emit = [&](const char* dir, const DirectionStats& stats) {
        for (const auto& [family, worst] : stats.family_worst)
            report.add(std::string(dir) + " " + family, worst, 1.0, true);
        ConstraintResidual rt;
        rt.label = std::string(dir) + " round-trip";
        rt.residual = stats.worst_round_trip;
        rt.scale = 1.0;
        rt.ok = stats.worst_round_trip <= opts.round_trip_tol;
        if (!rt.ok) report.pass = false;
        report.worst = std::max(report.worst, stats.worst_round_trip);
        report.entries.push_back(rt);
        const std::string prefix = std::string(dir) + ".";
        report.stats[prefix + "solved"] = stats.solved;
        report.stats[prefix + "rejected"] = stats.rejected;
        report.stats[prefix + "solver_failures"] = stats.failures;
        report.stats[prefix + "worst_source"] = stats.worst_source;
        report.stats[prefix + "worst_mapped"] = stats.worst_mapped;
        report.stats[prefix + "amplification"] =
            stats.worst_mapped / std::max(stats.worst_source, 1e-16);
    };
    emit("cdf_to_soc", forward);
    emit("soc_to_cdf", backward);
    report.stats["samples"] = opts.samples;
    report.stats["seed"] = static_cast<double>(opts.seed);
    if (forward.solved == 0 && backward.solved == 0) report.pass = false;
    return report;
}

VerifyReport verify_equivalence(const Network& net, int samples, double tol,
                                std::uint64_t seed) {
    EquivalenceOptions opts;
    opts.samples = samples;
    opts.tol = tol;
    opts.seed = seed;
    return verify_equivalence(net, opts);
}

}  // namespace relaxflow
