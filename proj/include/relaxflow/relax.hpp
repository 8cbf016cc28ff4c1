#pragma once

#include <span>
#include <utility>

#include "relaxflow/acpf.hpp"
#include "relaxflow/coneprog.hpp"
#include "relaxflow/solver.hpp"

namespace relaxflow {

enum class RelaxSpace { w_space, l_space };
enum class RelaxObjective { feasibility, opf_cost };

/// Where each model quantity lives inside the ConeProgram's variable vector.
/// Auxiliary entries are -1 when a given network does not need them.
struct VariableMap {
    RelaxSpace space = RelaxSpace::w_space;
    int n_vars = 0;
    std::vector<int> w;       ///< per bus: squared voltage magnitude
    std::vector<int> w_re;    ///< per branch, W-space: Re of the voltage product
    std::vector<int> w_im;    ///< per branch, W-space: Im of the voltage product
    std::vector<int> l;       ///< per branch, L-space: squared current magnitude
    std::vector<int> w_from_scaled;  ///< per branch, L-space: w_from / |T|^2 (may alias w)
    std::vector<int> p, q;    ///< per arc (from arcs first, then reverse arcs)
    std::vector<int> pg, qg;  ///< per generator
    std::vector<int> cost_epigraph;  ///< per generator, quadratic-cost epigraph
    std::vector<int> cost_scale;     ///< per generator, fixed to 1/(c2*base^2)
    std::vector<int> thermal_cap;    ///< per branch, fixed to s_rating
};

/// A candidate solution of either relaxation.
struct RelaxPoint {
    RelaxSpace space = RelaxSpace::w_space;
    std::vector<double> w;         ///< per bus
    std::vector<Complex> w_branch; ///< per branch (W-space)
    std::vector<double> l;         ///< per branch (L-space)
    std::vector<Complex> s;        ///< per arc
    std::vector<Complex> sg;       ///< per generator
};

/// W-space relaxation: KCL with shunts, both flow definitions, voltage
/// squared bounds, PAD on the voltage-product components, thermal cones and
/// the voltage-product cone |W_ij|^2 <= W_i W_j.
std::pair<ConeProgram, VariableMap> build_soc_e(const Network& network, RelaxObjective objective);

/// L-space relaxation: KCL with shunts, line-loss and voltage-drop rows with
/// the linear charging correction (b/2)^2 W_i/|T|^2, PAD through the factored
/// voltage product, thermal cones and |S_ij|^2 <= (W_i/|T|^2) L_ij.
std::pair<ConeProgram, VariableMap> build_cdf_e(const Network& network, RelaxObjective objective);

/// Same model as build_cdf_e with every coefficient computed from the real
/// shorthand (tz pairs) instead of complex arithmetic; row-for-row identical
/// structure, residuals agree to rounding.
std::pair<ConeProgram, VariableMap> build_cdf_e_real(const Network& network,
                                                     RelaxObjective objective);

/// Lifts a physically consistent AC state into either space. The result
/// satisfies the matching relaxation's constraints up to solver tolerance.
RelaxPoint lift_ac_solution(const Network& network, const ACState& state, RelaxSpace space);

/// Reads the mapped coordinates out of a solver point.
RelaxPoint extract_point(const VariableMap& map, std::span<const double> x);

/// Writes a point into a full-length variable vector, deriving the auxiliary
/// coordinates (scaled W, thermal caps, cost epigraphs) consistently.
std::vector<double> embed_point(const Network& network, const VariableMap& map,
                                const RelaxPoint& point);

/// Sum of generator costs expressed on the program's variables (same value
/// the opf_cost objective assigns), for cross-checking solved objectives.
double point_cost(const Network& network, const RelaxPoint& point);

}  // namespace relaxflow
