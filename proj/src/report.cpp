#include "relaxflow/report.hpp"

namespace relaxflow {

Json report_header(const std::string& command) {
    Json doc;
    doc["format"] = "relaxflow-report";
    doc["schema_version"] = 1;
    doc["command"] = command;
    return doc;
}

Json to_json(const Complex& value) { return Json{{"re", value.real()}, {"im", value.imag()}}; }

Json to_json(const Network& network, const ACState& state) {
    Json out;
    Json buses = Json::array();
    for (std::size_t i = 0; i < network.buses.size(); ++i) {
        buses.push_back({{"bus", network.buses[i].id},
                         {"vm", std::abs(state.voltages.v[i])},
                         {"va", std::arg(state.voltages.v[i])},
                         {"generation", to_json(state.bus_generation[i])}});
    }
    out["buses"] = std::move(buses);
    Json flows = Json::array();
    const std::size_t nbr = network.branches.size();
    for (std::size_t b = 0; b < nbr; ++b) {
        flows.push_back({{"branch", b},
                         {"from_bus", network.branches[b].from_bus},
                         {"to_bus", network.branches[b].to_bus},
                         {"s_from", to_json(state.flows.s[b])},
                         {"s_to", to_json(state.flows.s[nbr + b])}});
    }
    out["flows"] = std::move(flows);
    return out;
}

Json to_json(const std::vector<BoundViolation>& violations) {
    Json out = Json::array();
    for (const auto& v : violations) {
        out.push_back({{"entity", v.entity},
                       {"bound", v.bound},
                       {"value", v.value},
                       {"limit", v.limit},
                       {"slack", v.slack}});
    }
    return out;
}

Json to_json(const Solution& solution) {
    Json out;
    out["status"] = to_string(solution.status);
    out["objective"] = solution.objective;
    out["dual_objective"] = solution.dual_objective;
    out["duality_gap"] = solution.duality_gap;
    out["iterations"] = solution.iterations;
    out["max_eq_residual"] = solution.max_eq_residual;
    out["max_ineq_violation"] = solution.max_ineq_violation;
    out["max_cone_violation"] = solution.max_cone_violation;
    return out;
}

Json to_json(const RelaxPoint& point) {
    Json out;
    out["space"] = point.space == RelaxSpace::w_space ? "W" : "L";
    out["w"] = point.w;
    if (point.space == RelaxSpace::w_space) {
        Json wb = Json::array();
        for (const auto& v : point.w_branch) wb.push_back(to_json(v));
        out["w_branch"] = std::move(wb);
    } else {
        out["l"] = point.l;
    }
    Json s = Json::array();
    for (const auto& v : point.s) s.push_back(to_json(v));
    out["s"] = std::move(s);
    Json sg = Json::array();
    for (const auto& v : point.sg) sg.push_back(to_json(v));
    out["sg"] = std::move(sg);
    return out;
}

Json to_json(const VerifyReport& report) {
    Json out;
    out["tol"] = report.tol;
    out["pass"] = report.pass;
    out["worst"] = report.worst;
    Json entries = Json::array();
    for (const auto& e : report.entries) {
        entries.push_back(
            {{"label", e.label}, {"residual", e.residual}, {"scale", e.scale}, {"ok", e.ok}});
    }
    out["entries"] = std::move(entries);
    out["stats"] = report.stats;
    return out;
}

std::string render_report(const Json& doc, bool pretty) {
    return (pretty ? doc.dump(2) : doc.dump()) + "\n";
}

}  // namespace relaxflow
