#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relaxflow/errors.hpp"

namespace relaxflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sparse linear row a·x (= or <=) rhs.
struct LinearRow {
    std::vector<int> cols;
    std::vector<double> vals;
    double rhs = 0.0;
    std::string label;

    double dot(std::span<const double> x) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) acc += vals[k] * x[cols[k]];
        return acc;
    }
};

/// Rotated cone: sum of u_k^2 <= x_a * x_b with x_a, x_b >= 0.
struct RsocBlock {
    std::vector<int> u;
    int a = -1;
    int b = -1;
    std::string label;
};

/// Standard cone: || x_u ||_2 <= x_t.
struct SocBlock {
    int t = -1;
    std::vector<int> u;
    std::string label;
};

/// Standard-form conic model over named real variables: linear objective,
/// linear equalities/inequalities, per-variable box bounds and cones.
struct ConeProgram {
    int n_vars = 0;
    std::vector<std::string> var_names;
    std::vector<double> objective;  ///< linear coefficients, size n_vars
    double objective_constant = 0.0;
    std::vector<LinearRow> equalities;
    std::vector<LinearRow> inequalities;
    std::vector<double> lower, upper;  ///< box bounds, +-inf when absent
    std::vector<RsocBlock> rsoc_blocks;
    std::vector<SocBlock> soc_blocks;

    int add_variable(std::string name, double lb = -kInf, double ub = kInf);
    void add_equality(LinearRow row);
    void add_inequality(LinearRow row);
    void set_objective_term(int var, double coeff);

    /// Index-bound, duplicate-column and cone-sign checks; throws ModelError.
    void check_well_formed() const;
};

/// One evaluated constraint. `residual` is signed (positive = violated for
/// inequalities and cones); `scale` is the normalization max(1, |rhs|).
struct ConstraintResidual {
    std::string label;
    double residual = 0.0;
    double scale = 1.0;
    bool ok = true;
};

/// Outcome of checking a point, or of any verification run: per-constraint
/// residuals, worst normalized violation, pass/fail at `tol`.
struct VerifyReport {
    double tol = 0.0;
    bool pass = true;
    double worst = 0.0;               ///< max of |residual|/scale over failures and checks
    std::vector<ConstraintResidual> entries;
    std::map<std::string, double> stats;  ///< free-form numeric annotations

    void add(std::string label, double residual, double scale, bool violated_when_positive);
    const ConstraintResidual* worst_entry() const;
};

/// Evaluates every constraint of `program` at `x`:
/// equalities within tol*max(1,|rhs|), inequalities a·x - rhs <= tol*max(1,|rhs|),
/// boxes likewise, rotated cones as sum u^2 - x_a x_b <= tol*max(1, |x_a x_b|),
/// standard cones as ||u|| - x_t <= tol*max(1, |x_t|).
VerifyReport check_point(const ConeProgram& program, std::span<const double> x, double tol);

/// Rewrites every rotated cone through the map u^2 <= ab <=>
/// ||(2u, a-b)|| <= a+b, introducing definitional auxiliaries; the result
/// uses standard cones only and agrees with the input on shared variables.
ConeProgram to_standard_soc(const ConeProgram& program);

/// Fills the auxiliary variables appended by to_standard_soc from the
/// original coordinates (x_std restricted to the first n variables is x).
std::vector<double> extend_to_standard(const ConeProgram& original, std::span<const double> x);

/// Plain-text sparse listing of rows, bounds and cones for debugging.
std::string export_text(const ConeProgram& program);

}  // namespace relaxflow
