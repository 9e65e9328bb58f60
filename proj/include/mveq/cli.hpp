#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace mveq {

struct RunConfig {
    std::string command; // solve-quadratic | solve-linear-mv | verify | frontier | check-conditions | random-suite
    std::string input;
    std::string output; // empty: write to the out stream
    std::string format = "json";
    double tol = 1e-9;
    double rank_tol = 1e-10;
    std::uint64_t seed = 1;
    int count = 200;
    int jobs = 1;
};

enum ExitCode { kOk = 0, kParseError = 1, kValidationError = 2, kNonexistence = 3 };

// Executes one command. Reports go to config.output or `out`; diagnostics to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

} // namespace mveq
