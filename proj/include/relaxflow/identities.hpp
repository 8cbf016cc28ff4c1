#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "relaxflow/network.hpp"
#include "relaxflow/rng.hpp"

namespace relaxflow {

/// Draws a branch with parameters in the ranges the identity sweeps use:
/// r in [0, 0.05], x in [0.01, 0.3], b in [0, 0.5], t in [0.9, 1.1],
/// shift in [-0.2, 0.2]; with `degenerate` the extension parameters are
/// pinned to b = 0, t = 1, shift = 0.
Branch random_identity_branch(Rng& rng, bool degenerate = false);

/// Voltage with magnitude in [0.9, 1.1] and angle in [-pi/2, pi/2].
Complex random_identity_voltage(Rng& rng);

/// Max relative residual per identity over `draws` seeded random
/// (V_i, V_j, branch) triples: line loss, voltage drop (and its imaginary
/// residue), squared current, squared power, squared voltage product, and
/// the reconstruction of both flows from the loss/difference pair.
std::map<std::string, double> run_identity_sweep(int draws, std::uint64_t seed,
                                                 bool degenerate = false);

}  // namespace relaxflow
