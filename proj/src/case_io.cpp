#include "relaxflow/case_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace relaxflow {

namespace {

// ---------------------------------------------------------------------------
// MATPOWER tokenizer
// ---------------------------------------------------------------------------

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    char advance() {
        char c = text[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }

    /// Skips spaces, tabs, carriage returns and % comments. Newlines are
    /// significant inside matrices, so they are skipped only when asked.
    void skip_blanks(bool skip_newlines) {
        while (!eof()) {
            char c = peek();
            if (c == '%') {
                while (!eof() && peek() != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
                advance();
            } else if (c == '\n' && skip_newlines) {
                advance();
            } else {
                break;
            }
        }
    }
};

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

bool number_start(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

std::string read_ident(Cursor& cur) {
    std::string out;
    while (!cur.eof() && ident_char(cur.peek())) out.push_back(cur.advance());
    return out;
}

double read_number(Cursor& cur) {
    const int line = cur.line;
    const int col = cur.col;
    std::size_t start = cur.pos;
    if (!cur.eof() && (cur.peek() == '-' || cur.peek() == '+')) cur.advance();
    while (!cur.eof()) {
        char c = cur.peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            cur.advance();
        } else if (c == 'e' || c == 'E') {
            cur.advance();
            if (!cur.eof() && (cur.peek() == '-' || cur.peek() == '+')) cur.advance();
        } else {
            break;
        }
    }
    double value = 0.0;
    const char* first = cur.text.data() + start;
    const char* last = cur.text.data() + cur.pos;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last)
        throw ParseError("expected a number", line, col);
    return value;
}

std::vector<std::vector<double>> read_matrix(Cursor& cur, const std::string& name) {
    // cur sits just past '['. Rows end at ';' or newline; ']' closes.
    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    auto flush_row = [&]() {
        if (row.empty()) return;
        if (!rows.empty() && rows.front().size() != row.size())
            throw ParseError("ragged row in matrix " + name + ": expected " +
                                 std::to_string(rows.front().size()) + " columns, got " +
                                 std::to_string(row.size()),
                             cur.line, cur.col);
        rows.push_back(std::move(row));
        row.clear();
    };
    while (true) {
        cur.skip_blanks(false);
        if (cur.eof()) throw ParseError("unterminated matrix " + name, cur.line, cur.col);
        char c = cur.peek();
        if (c == ']') {
            cur.advance();
            flush_row();
            return rows;
        }
        if (c == ';' || c == '\n') {
            cur.advance();
            flush_row();
            continue;
        }
        if (!number_start(c))
            throw ParseError(std::string("non-numeric cell '") + c + "' in matrix " + name,
                             cur.line, cur.col);
        row.push_back(read_number(cur));
    }
}

void skip_quoted(Cursor& cur) {
    // cur sits just past the opening quote
    while (!cur.eof() && cur.peek() != '\'') cur.advance();
    if (!cur.eof()) cur.advance();
}

void skip_braced(Cursor& cur) {
    int depth = 1;
    while (!cur.eof() && depth > 0) {
        char c = cur.advance();
        if (c == '{') ++depth;
        if (c == '}') --depth;
    }
}

void expect_semicolon(Cursor& cur) {
    cur.skip_blanks(true);
    if (cur.eof() || cur.peek() != ';')
        throw ParseError("expected ';'", cur.line, cur.col);
    cur.advance();
}

/// Field name after the struct prefix: "mpc.baseMVA" -> "baseMVA".
std::string field_of(const std::string& ident) {
    auto dot = ident.rfind('.');
    return dot == std::string::npos ? ident : ident.substr(dot + 1);
}

}  // namespace

CaseDocument parse_matpower(std::string_view text, const MatpowerParseOptions& options) {
    CaseDocument doc;
    bool saw_base = false, saw_bus = false, saw_gen = false, saw_branch = false;

    Cursor cur{text};
    while (true) {
        cur.skip_blanks(true);
        if (cur.eof()) break;

        const int line = cur.line;
        const int col = cur.col;
        char c = cur.peek();
        if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_')
            throw ParseError(std::string("unexpected character '") + c + "'", line, col);

        std::string ident = read_ident(cur);
        if (ident == "function") {
            // header line, e.g. "function mpc = case5"; skip to end of line
            while (!cur.eof() && cur.peek() != '\n') cur.advance();
            continue;
        }

        cur.skip_blanks(true);
        if (cur.eof() || cur.peek() != '=')
            throw ParseError("expected '=' after '" + ident + "'", cur.line, cur.col);
        cur.advance();
        cur.skip_blanks(true);
        if (cur.eof()) throw ParseError("missing value for '" + ident + "'", cur.line, cur.col);

        const std::string field = field_of(ident);
        char v = cur.peek();
        if (v == '\'') {
            cur.advance();
            skip_quoted(cur);
            expect_semicolon(cur);
        } else if (v == '{') {
            cur.advance();
            skip_braced(cur);
            expect_semicolon(cur);
        } else if (v == '[') {
            cur.advance();
            auto rows = read_matrix(cur, field);
            expect_semicolon(cur);
            if (field == "bus") {
                doc.bus_rows = std::move(rows);
                saw_bus = true;
            } else if (field == "gen") {
                doc.gen_rows = std::move(rows);
                saw_gen = true;
            } else if (field == "branch") {
                doc.branch_rows = std::move(rows);
                saw_branch = true;
            } else if (field == "gencost") {
                doc.gencost_rows = std::move(rows);
                doc.has_gencost = true;
            } else if (options.capture_unknown) {
                doc.extra[field] = std::move(rows);
            }
        } else if (number_start(v)) {
            double value = read_number(cur);
            expect_semicolon(cur);
            if (field == "baseMVA") {
                doc.base_mva = value;
                saw_base = true;
            } else if (options.capture_unknown) {
                doc.extra[field] = {{value}};
            }
        } else {
            throw ParseError(std::string("unexpected value starting with '") + v + "'",
                             cur.line, cur.col);
        }
    }

    if (!saw_base) throw ParseError("missing required field baseMVA");
    if (!saw_bus) throw ParseError("missing required matrix bus");
    if (!saw_gen) throw ParseError("missing required matrix gen");
    if (!saw_branch) throw ParseError("missing required matrix branch");
    return doc;
}

std::string render_matpower(const CaseDocument& doc) {
    std::ostringstream os;
    os.precision(17);
    os << "function mpc = rendered_case\n";
    os << "mpc.baseMVA = " << doc.base_mva << ";\n";
    auto matrix = [&os](const char* name, const std::vector<std::vector<double>>& rows) {
        os << "mpc." << name << " = [\n";
        for (const auto& row : rows) {
            os << "\t";
            for (std::size_t i = 0; i < row.size(); ++i) os << row[i] << (i + 1 < row.size() ? "\t" : "");
            os << ";\n";
        }
        os << "];\n";
    };
    matrix("bus", doc.bus_rows);
    matrix("gen", doc.gen_rows);
    matrix("branch", doc.branch_rows);
    if (doc.has_gencost) matrix("gencost", doc.gencost_rows);
    for (const auto& [name, rows] : doc.extra) matrix(name.c_str(), rows);
    return os.str();
}

// ---------------------------------------------------------------------------
// Conversion to per-unit Network
// ---------------------------------------------------------------------------

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

/// MATPOWER marks a PAD bound as unconstrained with 0 or +-360 degrees.
bool pad_sentinel(double deg) {
    return deg == 0.0 || deg <= -360.0 || deg >= 360.0;
}

[[noreturn]] void row_error(const char* table, std::size_t row, const std::string& what) {
    throw ModelError(std::string(table) + " row " + std::to_string(row + 1) + ": " + what);
}

}  // namespace

Network to_network(const CaseDocument& doc) {
    Network net;
    if (!(doc.base_mva > 0.0) || !std::isfinite(doc.base_mva))
        throw ModelError("baseMVA must be positive");
    net.base_mva = doc.base_mva;
    const double base = doc.base_mva;

    for (std::size_t i = 0; i < doc.bus_rows.size(); ++i) {
        const auto& row = doc.bus_rows[i];
        if (row.size() < 13) row_error("bus", i, "expected at least 13 columns");
        Bus bus;
        bus.id = static_cast<int>(row[0]);
        bus.is_reference = static_cast<int>(row[1]) == 3;
        bus.p_demand = row[2] / base;
        bus.q_demand = row[3] / base;
        bus.shunt_g = row[4] / base;
        bus.shunt_b = row[5] / base;
        bus.v_max = row[11];
        bus.v_min = row[12];
        if (!(bus.v_min > 0.0) || bus.v_min > bus.v_max)
            row_error("bus", i, "need 0 < Vmin <= Vmax");
        if (net.bus_index(bus.id) >= 0) row_error("bus", i, "duplicate bus id");
        net.buses.push_back(bus);
    }

    for (std::size_t i = 0; i < doc.gen_rows.size(); ++i) {
        const auto& row = doc.gen_rows[i];
        if (row.size() < 10) row_error("gen", i, "expected at least 10 columns");
        if (row[7] <= 0.0) continue;  // out of service
        Generator gen;
        gen.bus = static_cast<int>(row[0]);
        gen.p_set = row[1] / base;
        gen.q_set = row[2] / base;
        gen.q_max = row[3] / base;
        gen.q_min = row[4] / base;
        gen.v_set = row[5];
        gen.p_max = row[8] / base;
        gen.p_min = row[9] / base;
        if (net.bus_index(gen.bus) < 0) row_error("gen", i, "unknown bus");
        if (gen.p_min > gen.p_max || gen.q_min > gen.q_max)
            row_error("gen", i, "output box is empty");
        // Polynomial cost with three coefficients; anything else maps to zero.
        if (doc.has_gencost && i < doc.gencost_rows.size()) {
            const auto& cost = doc.gencost_rows[i];
            if (cost.size() >= 7 && static_cast<int>(cost[0]) == 2 &&
                static_cast<int>(cost[3]) == 3) {
                gen.c2 = cost[4];
                gen.c1 = cost[5];
                gen.c0 = cost[6];
            }
        }
        net.generators.push_back(gen);
    }

    for (std::size_t i = 0; i < doc.branch_rows.size(); ++i) {
        const auto& row = doc.branch_rows[i];
        if (row.size() < 13) row_error("branch", i, "expected at least 13 columns");
        if (row[10] == 0.0) continue;  // out of service
        Branch br;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        br.r = row[2];
        br.x = row[3];
        br.b_charge = row[4];
        br.s_rating = row[5] > 0.0 ? row[5] / base : 0.0;
        br.tap = row[8] == 0.0 ? 1.0 : row[8];
        br.shift = row[9] * kDegToRad;
        if (net.bus_index(br.from_bus) < 0 || net.bus_index(br.to_bus) < 0)
            row_error("branch", i, "unknown endpoint bus");
        if (br.r == 0.0 && br.x == 0.0) row_error("branch", i, "r = x = 0");
        if (!(br.tap > 0.0)) row_error("branch", i, "tap ratio must be positive");

        const double angmin = row[11];
        const double angmax = row[12];
        double limit_deg = 1e300;
        if (!pad_sentinel(angmin)) limit_deg = std::min(limit_deg, std::abs(angmin));
        if (!pad_sentinel(angmax)) limit_deg = std::min(limit_deg, angmax);
        double limit = limit_deg >= 1e300 ? kDefaultAngleLimit : limit_deg * kDegToRad;
        br.angle_limit = std::min(std::max(limit, 0.0), std::numbers::pi / 2.0);
        net.branches.push_back(br);
    }

    validate_or_throw(net);
    return net;
}

// ---------------------------------------------------------------------------
// Native format
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kNativeFormat = "relaxflow-network";
constexpr int kNativeSchemaVersion = 1;

using nlohmann::json;

double as_finite(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

std::string write_native(const Network& network) {
    json doc;
    doc["format"] = kNativeFormat;
    doc["schema_version"] = kNativeSchemaVersion;
    doc["base_mva"] = network.base_mva;

    json buses = json::array();
    for (const Bus& b : network.buses) {
        buses.push_back({{"id", b.id},
                         {"v_min", b.v_min},
                         {"v_max", b.v_max},
                         {"shunt_g", b.shunt_g},
                         {"shunt_b", b.shunt_b},
                         {"p_demand", b.p_demand},
                         {"q_demand", b.q_demand},
                         {"is_reference", b.is_reference}});
    }
    doc["buses"] = std::move(buses);

    json branches = json::array();
    for (const Branch& b : network.branches) {
        branches.push_back({{"from_bus", b.from_bus},
                            {"to_bus", b.to_bus},
                            {"r", b.r},
                            {"x", b.x},
                            {"b_charge", b.b_charge},
                            {"tap", b.tap},
                            {"shift", b.shift},
                            {"s_rating", b.s_rating},
                            {"angle_limit", b.angle_limit}});
    }
    doc["branches"] = std::move(branches);

    json gens = json::array();
    for (const Generator& g : network.generators) {
        gens.push_back({{"bus", g.bus},
                        {"p_min", g.p_min},
                        {"p_max", g.p_max},
                        {"q_min", g.q_min},
                        {"q_max", g.q_max},
                        {"c0", g.c0},
                        {"c1", g.c1},
                        {"c2", g.c2},
                        {"p_set", g.p_set},
                        {"q_set", g.q_set},
                        {"v_set", g.v_set}});
    }
    doc["generators"] = std::move(gens);

    return doc.dump(2) + "\n";
}

Network read_native(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed native document: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.value("format", "") != kNativeFormat)
            throw ParseError("not a relaxflow-network document");
        if (doc.at("schema_version").get<int>() != kNativeSchemaVersion)
            throw ParseError("schema-version mismatch: expected " +
                             std::to_string(kNativeSchemaVersion));

        Network net;
        net.base_mva = as_finite(doc, "base_mva");
        for (const auto& j : doc.at("buses")) {
            Bus b;
            b.id = j.at("id").get<int>();
            b.v_min = as_finite(j, "v_min");
            b.v_max = as_finite(j, "v_max");
            b.shunt_g = as_finite(j, "shunt_g");
            b.shunt_b = as_finite(j, "shunt_b");
            b.p_demand = as_finite(j, "p_demand");
            b.q_demand = as_finite(j, "q_demand");
            b.is_reference = j.at("is_reference").get<bool>();
            net.buses.push_back(b);
        }
        for (const auto& j : doc.at("branches")) {
            Branch b;
            b.from_bus = j.at("from_bus").get<int>();
            b.to_bus = j.at("to_bus").get<int>();
            b.r = as_finite(j, "r");
            b.x = as_finite(j, "x");
            b.b_charge = as_finite(j, "b_charge");
            b.tap = as_finite(j, "tap");
            b.shift = as_finite(j, "shift");
            b.s_rating = as_finite(j, "s_rating");
            b.angle_limit = as_finite(j, "angle_limit");
            net.branches.push_back(b);
        }
        for (const auto& j : doc.at("generators")) {
            Generator g;
            g.bus = j.at("bus").get<int>();
            g.p_min = as_finite(j, "p_min");
            g.p_max = as_finite(j, "p_max");
            g.q_min = as_finite(j, "q_min");
            g.q_max = as_finite(j, "q_max");
            g.c0 = as_finite(j, "c0");
            g.c1 = as_finite(j, "c1");
            g.c2 = as_finite(j, "c2");
            g.p_set = as_finite(j, "p_set");
            g.q_set = as_finite(j, "q_set");
            g.v_set = as_finite(j, "v_set");
            net.generators.push_back(g);
        }
        return net;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed native document: ") + e.what());
    }
}

}  // namespace relaxflow
