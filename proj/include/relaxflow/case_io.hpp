#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "relaxflow/network.hpp"

namespace relaxflow {

/// Raw numeric tables of a MATPOWER-style case, captured verbatim.
struct CaseDocument {
    double base_mva = 0.0;
    std::vector<std::vector<double>> bus_rows;
    std::vector<std::vector<double>> gen_rows;
    std::vector<std::vector<double>> branch_rows;
    std::vector<std::vector<double>> gencost_rows;
    bool has_gencost = false;
    /// Unrecognized numeric matrices, kept only when asked for.
    std::map<std::string, std::vector<std::vector<double>>> extra;
};

struct MatpowerParseOptions {
    bool capture_unknown = false;  ///< keep unrecognized matrices in `extra`
};

/// Parses the MATPOWER subset: `mpc.baseMVA = <num>;` plus bracketed
/// matrices for bus/gen/branch (required) and gencost (optional). `%`
/// starts a comment; rows end at `;` or newline. Locale independent.
/// Throws ParseError with a 1-based line/column on malformed input.
CaseDocument parse_matpower(std::string_view text, const MatpowerParseOptions& options = {});

/// Renders a CaseDocument back to MATPOWER syntax (used for fixtures;
/// parse_matpower(render_matpower(doc)) reproduces the tables).
std::string render_matpower(const CaseDocument& doc);

/// Converts raw MATPOWER tables to a per-unit Network:
/// MW/MVAr divided by baseMVA, degrees to radians, tap 0 meaning 1,
/// out-of-service rows dropped, PAD sentinels replaced by the default.
/// Throws ModelError naming the offending row on invalid data.
Network to_network(const CaseDocument& doc);

/// Native structured format: versioned JSON carrying exact per-unit values.
/// Round-trips every Network field bit-comparably for finite doubles.
std::string write_native(const Network& network);
Network read_native(std::string_view text);

}  // namespace relaxflow
