#pragma once

#include "relaxflow/coneprog.hpp"

namespace relaxflow {

enum class SolveStatus {
    optimal,
    infeasible,
    unbounded,
    iteration_limit,
    numerical_failure,
};

const char* to_string(SolveStatus status);

struct SolveOptions {
    double tol = 1e-7;      ///< feasibility + gap target at the reported point
    int max_iter = 100;
    int equilibrate_sweeps = 10;
    int refine_steps = 2;   ///< iterative-refinement passes per KKT solve
    bool verbose = false;
};

struct Solution {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<double> x;
    double objective = 0.0;       ///< includes the program's constant term
    double dual_objective = 0.0;  ///< certified lower bound when optimal
    double duality_gap = 0.0;
    /// Residuals recomputed from x against the original program, each
    /// normalized by max(1, |rhs|) exactly as in check_point.
    double max_eq_residual = 0.0;
    double max_ineq_violation = 0.0;
    double max_cone_violation = 0.0;
    int iterations = 0;
};

/// Interior-point solve of the conic program on the homogeneous self-dual
/// embedding, with Nesterov-Todd scaling for the cone blocks and a dense
/// normal-equation factorization. Deterministic: identical inputs and
/// options produce identical iterates.
Solution solve(const ConeProgram& program, const SolveOptions& opts = {});

}  // namespace relaxflow
