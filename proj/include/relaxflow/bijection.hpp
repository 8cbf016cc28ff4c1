#pragma once

#include <cstdint>

#include "relaxflow/relax.hpp"

namespace relaxflow {

/// L-space point -> W-space point. W_i and all flows are copied; the
/// branch voltage product is reconstructed from the factored form
/// W_ij = Z* T* ((Y* - i b/2) W_i/|T|^2 - S_ij).
RelaxPoint cdf_to_soc(const Network& network, const RelaxPoint& point);

/// W-space point -> L-space point with
/// L_ij = |Y|^2 (W_i/|T|^2 - W_ij/T* - W_ij*/T + W_j)
///        - (b/2)^2 W_i/|T|^2 - b Im(S_ij).
RelaxPoint soc_to_cdf(const Network& network, const RelaxPoint& point);

/// Per-branch residual of the combined loss/drop property that holds on
/// L-space feasible points:
/// Z S_ij* - (W_i/|T|^2 - W_j + Z* S_ji + i (b/2)(Z W_i/|T|^2 + Z* W_j)).
std::vector<Complex> combined_property_residual(const Network& network, const RelaxPoint& point);

struct EquivalenceOptions {
    int samples = 32;
    double tol = 1e-7;
    std::uint64_t seed = 0;
    double round_trip_tol = 1e-9;
    /// Test hook: perturbs the first mapped coordinate by this amount so a
    /// deliberate failure can be exercised end to end.
    double corrupt = 0.0;
};

/// Samples feasible points of each relaxation (random linear objectives over
/// the shared W/S coordinates), maps every point to the other model, checks
/// all constraints there at `tol`, and checks the round trip restores the
/// derived coordinate to round_trip_tol (relative). The report aggregates
/// worst violations per constraint family; solver failures are recorded as
/// stats, not fatal.
VerifyReport verify_equivalence(const Network& network, const EquivalenceOptions& opts);
VerifyReport verify_equivalence(const Network& network, int samples, double tol,
                                std::uint64_t seed);

}  // namespace relaxflow
