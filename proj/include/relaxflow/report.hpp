#pragma once

#include <string>

#include <json.hpp>

#include "relaxflow/acpf.hpp"
#include "relaxflow/coneprog.hpp"
#include "relaxflow/network.hpp"
#include "relaxflow/relax.hpp"
#include "relaxflow/solver.hpp"

namespace relaxflow {

using Json = nlohmann::json;

/// Common envelope of every CLI report. Keys serialize sorted, so identical
/// inputs produce byte-identical documents.
Json report_header(const std::string& command);

Json to_json(const Complex& value);
Json to_json(const Network& network, const ACState& state);
Json to_json(const std::vector<BoundViolation>& violations);
Json to_json(const Solution& solution);
Json to_json(const RelaxPoint& point);
Json to_json(const VerifyReport& report);

/// Final rendering: compact by default, indented with --pretty. Both end
/// with a newline and are deterministic.
std::string render_report(const Json& doc, bool pretty);

}  // namespace relaxflow
