#include "relaxflow/coneprog.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace relaxflow {

int ConeProgram::add_variable(std::string name, double lb, double ub) {
    var_names.push_back(std::move(name));
    lower.push_back(lb);
    upper.push_back(ub);
    objective.push_back(0.0);
    return n_vars++;
}

void ConeProgram::add_equality(LinearRow row) { equalities.push_back(std::move(row)); }

void ConeProgram::add_inequality(LinearRow row) { inequalities.push_back(std::move(row)); }

void ConeProgram::set_objective_term(int var, double coeff) { objective.at(var) = coeff; }

namespace {

void check_row(const LinearRow& row, int n, const char* kind) {
    if (row.cols.size() != row.vals.size())
        throw ModelError(std::string(kind) + " row '" + row.label + "': ragged col/val lists");
    std::set<int> seen;
    for (int c : row.cols) {
        if (c < 0 || c >= n)
            throw ModelError(std::string(kind) + " row '" + row.label + "': column " +
                             std::to_string(c) + " out of range");
        if (!seen.insert(c).second)
            throw ModelError(std::string(kind) + " row '" + row.label + "': duplicate column " +
                             std::to_string(c));
    }
}

}  // namespace

void ConeProgram::check_well_formed() const {
    if (static_cast<int>(var_names.size()) != n_vars ||
        static_cast<int>(objective.size()) != n_vars ||
        static_cast<int>(lower.size()) != n_vars || static_cast<int>(upper.size()) != n_vars)
        throw ModelError("program arrays disagree with n_vars");
    for (int i = 0; i < n_vars; ++i)
        if (lower[i] > upper[i])
            throw ModelError("variable '" + var_names[i] + "': empty box");
    for (const auto& row : equalities) check_row(row, n_vars, "equality");
    for (const auto& row : inequalities) check_row(row, n_vars, "inequality");
    for (const auto& blk : rsoc_blocks) {
        if (blk.u.empty()) throw ModelError("rotated cone '" + blk.label + "': empty u list");
        for (int c : blk.u)
            if (c < 0 || c >= n_vars)
                throw ModelError("rotated cone '" + blk.label + "': index out of range");
        if (blk.a < 0 || blk.a >= n_vars || blk.b < 0 || blk.b >= n_vars)
            throw ModelError("rotated cone '" + blk.label + "': index out of range");
        if (!(lower[blk.a] >= 0.0) || !(lower[blk.b] >= 0.0))
            throw ModelError("rotated cone '" + blk.label +
                             "': a/b variables need nonnegative lower bounds");
    }
    for (const auto& blk : soc_blocks) {
        if (blk.t < 0 || blk.t >= n_vars)
            throw ModelError("cone '" + blk.label + "': index out of range");
        for (int c : blk.u)
            if (c < 0 || c >= n_vars)
                throw ModelError("cone '" + blk.label + "': index out of range");
    }
}

void VerifyReport::add(std::string label, double residual, double scale,
                       bool violated_when_positive) {
    ConstraintResidual entry;
    entry.label = std::move(label);
    entry.residual = residual;
    entry.scale = scale <= 0.0 ? 1.0 : scale;
    const double normalized =
        (violated_when_positive ? residual : std::abs(residual)) / entry.scale;
    entry.ok = normalized <= tol;
    worst = std::max(worst, normalized);
    if (!entry.ok) pass = false;
    entries.push_back(std::move(entry));
}

const ConstraintResidual* VerifyReport::worst_entry() const {
    const ConstraintResidual* out = nullptr;
    double worst_norm = -kInf;
    for (const auto& e : entries) {
        const double n = std::abs(e.residual) / e.scale;
        if (n > worst_norm) {
            worst_norm = n;
            out = &e;
        }
    }
    return out;
}

VerifyReport check_point(const ConeProgram& program, std::span<const double> x, double tol) {
    if (static_cast<int>(x.size()) != program.n_vars)
        throw ModelError("check_point: point has " + std::to_string(x.size()) +
                         " coordinates, program has " + std::to_string(program.n_vars));
    VerifyReport report;
    report.tol = tol;

    for (std::size_t r = 0; r < program.equalities.size(); ++r) {
        const auto& row = program.equalities[r];
        const std::string label = row.label.empty() ? "eq " + std::to_string(r) : row.label;
        report.add(label, row.dot(x) - row.rhs, std::max(1.0, std::abs(row.rhs)), false);
    }
    for (std::size_t r = 0; r < program.inequalities.size(); ++r) {
        const auto& row = program.inequalities[r];
        const std::string label = row.label.empty() ? "ineq " + std::to_string(r) : row.label;
        report.add(label, row.dot(x) - row.rhs, std::max(1.0, std::abs(row.rhs)), true);
    }
    for (int i = 0; i < program.n_vars; ++i) {
        if (program.upper[i] < kInf)
            report.add("ub " + program.var_names[i], x[i] - program.upper[i],
                       std::max(1.0, std::abs(program.upper[i])), true);
        if (program.lower[i] > -kInf)
            report.add("lb " + program.var_names[i], program.lower[i] - x[i],
                       std::max(1.0, std::abs(program.lower[i])), true);
    }
    for (std::size_t k = 0; k < program.rsoc_blocks.size(); ++k) {
        const auto& blk = program.rsoc_blocks[k];
        const std::string label = blk.label.empty() ? "rsoc " + std::to_string(k) : blk.label;
        double uu = 0.0;
        for (int c : blk.u) uu += x[c] * x[c];
        const double ab = x[blk.a] * x[blk.b];
        report.add(label, uu - ab, std::max(1.0, std::abs(ab)), true);
    }
    for (std::size_t k = 0; k < program.soc_blocks.size(); ++k) {
        const auto& blk = program.soc_blocks[k];
        const std::string label = blk.label.empty() ? "soc " + std::to_string(k) : blk.label;
        double uu = 0.0;
        for (int c : blk.u) uu += x[c] * x[c];
        report.add(label, std::sqrt(uu) - x[blk.t], std::max(1.0, std::abs(x[blk.t])), true);
    }
    return report;
}

ConeProgram to_standard_soc(const ConeProgram& program) {
    ConeProgram out = program;
    out.rsoc_blocks.clear();
    for (std::size_t k = 0; k < program.rsoc_blocks.size(); ++k) {
        const auto& blk = program.rsoc_blocks[k];
        const std::string base = blk.label.empty() ? "rsoc" + std::to_string(k) : blk.label;
        const int t_sum = out.add_variable(base + ".sum", 0.0, kInf);
        out.add_equality({{t_sum, blk.a, blk.b}, {1.0, -1.0, -1.0}, 0.0, base + ".sum.def"});
        SocBlock soc;
        soc.t = t_sum;
        soc.label = base;
        for (std::size_t j = 0; j < blk.u.size(); ++j) {
            const int tu = out.add_variable(base + ".u" + std::to_string(j), -kInf, kInf);
            out.add_equality({{tu, blk.u[j]}, {1.0, -2.0}, 0.0, base + ".u.def"});
            soc.u.push_back(tu);
        }
        const int t_diff = out.add_variable(base + ".diff", -kInf, kInf);
        out.add_equality({{t_diff, blk.a, blk.b}, {1.0, -1.0, 1.0}, 0.0, base + ".diff.def"});
        soc.u.push_back(t_diff);
        out.soc_blocks.push_back(std::move(soc));
    }
    return out;
}

std::vector<double> extend_to_standard(const ConeProgram& original, std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    for (const auto& blk : original.rsoc_blocks) {
        out.push_back(x[blk.a] + x[blk.b]);
        for (int c : blk.u) out.push_back(2.0 * x[c]);
        out.push_back(x[blk.a] - x[blk.b]);
    }
    return out;
}

std::string export_text(const ConeProgram& program) {
    std::ostringstream os;
    os.precision(17);
    os << "coneprog vars " << program.n_vars << "\n";
    for (int i = 0; i < program.n_vars; ++i) {
        os << "var " << i << " " << program.var_names[i];
        if (program.lower[i] > -kInf) os << " lb " << program.lower[i];
        if (program.upper[i] < kInf) os << " ub " << program.upper[i];
        if (program.objective[i] != 0.0) os << " obj " << program.objective[i];
        os << "\n";
    }
    if (program.objective_constant != 0.0)
        os << "objective constant " << program.objective_constant << "\n";
    auto rows = [&os](const char* kind, const std::vector<LinearRow>& list) {
        for (const auto& row : list) {
            os << kind << " " << row.label << " :";
            for (std::size_t k = 0; k < row.cols.size(); ++k)
                os << " " << row.vals[k] << "*x" << row.cols[k];
            os << (kind[0] == 'e' ? " = " : " <= ") << row.rhs << "\n";
        }
    };
    rows("eq", program.equalities);
    rows("ineq", program.inequalities);
    for (const auto& blk : program.rsoc_blocks) {
        os << "rsoc " << blk.label << " : sum(";
        for (std::size_t k = 0; k < blk.u.size(); ++k) os << (k ? "," : "") << "x" << blk.u[k];
        os << ")^2 <= x" << blk.a << "*x" << blk.b << "\n";
    }
    for (const auto& blk : program.soc_blocks) {
        os << "soc " << blk.label << " : ||(";
        for (std::size_t k = 0; k < blk.u.size(); ++k) os << (k ? "," : "") << "x" << blk.u[k];
        os << ")|| <= x" << blk.t << "\n";
    }
    return os.str();
}

}  // namespace relaxflow
