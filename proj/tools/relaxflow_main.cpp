#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "relaxflow/bijection.hpp"
#include "relaxflow/case_io.hpp"
#include "relaxflow/identities.hpp"
#include "relaxflow/report.hpp"

namespace {

using namespace relaxflow;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerification = 4;

struct GlobalFlags {
    bool degenerate = false;
    bool pretty = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Network load_network(const std::string& path, const std::string& format,
                     const GlobalFlags& flags) {
    const std::string text = read_file(path);
    std::string fmt = format;
    if (fmt == "auto")
        fmt = path.size() > 2 && path.substr(path.size() - 2) == ".m" ? "matpower" : "native";
    Network net;
    if (fmt == "matpower") {
        net = to_network(parse_matpower(text));
    } else {
        net = read_native(text);
        validate_or_throw(net);
    }
    if (flags.degenerate) net = degenerate_copy(net);
    return net;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("RELAXFLOW_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            return 0;
        }
    }
    return 0;
}

void print_report(const Json& doc, const GlobalFlags& flags) {
    std::cout << render_report(doc, flags.pretty);
}

int cmd_parse(const std::string& path, const std::string& format, const std::string& out_path,
              const GlobalFlags& flags) {
    const Network net = load_network(path, format, flags);
    const std::string native = write_native(net);
    if (out_path.empty()) {
        std::cout << native;
        return kExitOk;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return kExitValidation;
    }
    out << native;
    Json doc = report_header("parse");
    doc["input"] = path;
    doc["output"] = out_path;
    doc["buses"] = net.buses.size();
    doc["branches"] = net.branches.size();
    doc["generators"] = net.generators.size();
    print_report(doc, flags);
    return kExitOk;
}

int cmd_pf(const std::string& path, const std::string& format, double tol, int max_iter,
           const GlobalFlags& flags) {
    const Network net = load_network(path, format, flags);
    NewtonOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    Json doc = report_header("pf");
    doc["input"] = path;
    doc["tol"] = tol;
    try {
        const ACState state = newton_solve(net, PowerFlowControls::from_setpoints(net), opts);
        const auto residuals = kcl_residuals(net, state);
        double worst = 0.0;
        for (const auto& r : residuals) worst = std::max(worst, std::abs(r));
        doc["status"] = "converged";
        doc["max_kcl_residual"] = worst;
        doc["solution"] = to_json(net, state);
        doc["violations"] = to_json(operational_violations(net, state, 1e-9));
        doc["cost"] = generation_cost(net, state.bus_generation);
        print_report(doc, flags);
        return kExitOk;
    } catch (const SolveError& e) {
        doc["status"] = "non-converged";
        doc["error"] = e.what();
        doc["mismatch_trace"] = e.trace();
        print_report(doc, flags);
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}

int cmd_relax(const std::string& path, const std::string& format, const std::string& model,
              const std::string& objective, double tol, const GlobalFlags& flags) {
    const Network net = load_network(path, format, flags);
    const RelaxObjective obj =
        objective == "cost" ? RelaxObjective::opf_cost : RelaxObjective::feasibility;
    std::pair<ConeProgram, VariableMap> built =
        model == "soc"      ? build_soc_e(net, obj)
        : model == "cdf"    ? build_cdf_e(net, obj)
                            : build_cdf_e_real(net, obj);
    SolveOptions opts;
    opts.tol = tol;
    const Solution sol = solve(built.first, opts);

    Json doc = report_header("relax");
    doc["input"] = path;
    doc["model"] = model;
    doc["objective"] = objective;
    doc["solution"] = to_json(sol);
    if (sol.status == SolveStatus::optimal) {
        const RelaxPoint point = extract_point(built.second, sol.x);
        doc["point"] = to_json(point);
        if (obj == RelaxObjective::opf_cost) doc["cost"] = sol.objective;
    }
    print_report(doc, flags);
    if (sol.status != SolveStatus::optimal) {
        std::cerr << "error: solve ended with status " << to_string(sol.status) << "\n";
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_verify(const std::string& path, const std::string& format, int samples,
               std::uint64_t seed, double tol, const GlobalFlags& flags) {
    const Network net = load_network(path, format, flags);
    EquivalenceOptions opts;
    opts.samples = samples;
    opts.tol = tol;
    opts.seed = seed;
    if (const char* corrupt = std::getenv("RELAXFLOW_TEST_CORRUPT"))
        opts.corrupt = std::atof(corrupt);
    const VerifyReport report = verify_equivalence(net, opts);

    Json doc = report_header("verify");
    doc["input"] = path;
    doc["samples"] = samples;
    doc["seed"] = seed;
    doc["report"] = to_json(report);
    print_report(doc, flags);
    if (!report.pass) {
        const ConstraintResidual* worst = report.worst_entry();
        std::cerr << "error: equivalence verification failed";
        if (worst) std::cerr << " (worst: " << worst->label << " = " << worst->residual << ")";
        std::cerr << "\n";
        return kExitVerification;
    }
    return kExitOk;
}

int cmd_identities(int draws, std::uint64_t seed, const GlobalFlags& flags) {
    const auto worst = run_identity_sweep(draws, seed, flags.degenerate);
    Json doc = report_header("identities");
    doc["draws"] = draws;
    doc["seed"] = seed;
    doc["degenerate"] = flags.degenerate;
    doc["max_residual"] = worst;
    print_report(doc, flags);
    for (const auto& [name, value] : worst) {
        if (value >= 1e-11) {
            std::cerr << "error: identity " << name << " residual " << value << "\n";
            return kExitVerification;
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AC power flow feasibility models and their conic relaxations"};
    app.require_subcommand(1);
    GlobalFlags flags;
    app.add_flag("--degenerate", flags.degenerate,
                 "zero line charging and shunts, unit transformers");
    app.add_flag("--pretty", flags.pretty, "indent report output");

    std::string path, format = "auto", out_path, model = "soc", objective = "feasibility";
    double tol_pf = 1e-8, tol_relax = 1e-7, tol_verify = 1e-7;
    int max_iter = 50, samples = 32, draws = 10000;
    std::uint64_t seed = default_seed();

    auto* parse = app.add_subcommand("parse", "parse and validate a case file");
    parse->add_option("case", path)->required();
    parse->add_option("--format", format)->check(CLI::IsMember({"auto", "matpower", "native"}));
    parse->add_option("--out", out_path, "write the native document here");

    auto* pf = app.add_subcommand("pf", "solve the power flow equations");
    pf->add_option("case", path)->required();
    pf->add_option("--format", format)->check(CLI::IsMember({"auto", "matpower", "native"}));
    pf->add_option("--tol", tol_pf);
    pf->add_option("--max-iter", max_iter);

    auto* relax = app.add_subcommand("relax", "build and solve a relaxation");
    relax->add_option("case", path)->required();
    relax->add_option("--format", format)->check(CLI::IsMember({"auto", "matpower", "native"}));
    relax->add_option("--model", model)->check(CLI::IsMember({"soc", "cdf", "cdf-real"}));
    relax->add_option("--objective", objective)->check(CLI::IsMember({"feasibility", "cost"}));
    relax->add_option("--tol", tol_relax);

    auto* verify = app.add_subcommand("verify", "verify the relaxation equivalence");
    verify->add_option("case", path)->required();
    verify->add_option("--format", format)->check(CLI::IsMember({"auto", "matpower", "native"}));
    verify->add_option("--samples", samples);
    verify->add_option("--seed", seed);
    verify->add_option("--tol", tol_verify);

    auto* identities = app.add_subcommand("identities", "sweep the power flow identities");
    identities->add_option("--draws", draws);
    identities->add_option("--seed", seed);

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (parse->parsed()) return cmd_parse(path, format, out_path, flags);
        if (pf->parsed()) return cmd_pf(path, format, tol_pf, max_iter, flags);
        if (relax->parsed()) return cmd_relax(path, format, model, objective, tol_relax, flags);
        if (verify->parsed()) return cmd_verify(path, format, samples, seed, tol_verify, flags);
        if (identities->parsed()) return cmd_identities(draws, seed, flags);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ModelError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SolveError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
