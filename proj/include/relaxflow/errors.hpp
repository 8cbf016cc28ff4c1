#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace relaxflow {

/// Domain-model invariant broken (bad impedance, dangling bus reference, ...).
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Syntax or schema error in an input document. Carries a 1-based location
/// when one is known (0 means "no position").
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        if (line <= 0) return what;
        std::string msg = what + " (line " + std::to_string(line);
        if (column > 0) msg += ", column " + std::to_string(column);
        msg += ")";
        return msg;
    }
    int line_;
    int column_;
};

/// Numerical solve gave up: singular system, divergence, iteration limit.
/// `trace` holds the per-iteration progress measure for diagnostics.
class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, std::vector<double> trace = {})
        : std::runtime_error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

}  // namespace relaxflow
