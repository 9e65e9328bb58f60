#include <iostream>

#include <CLI11.hpp>

#include "mveq/cli.hpp"

int main(int argc, char** argv) {
    mveq::RunConfig cfg;
    CLI::App app{"Quadratic and linear mean-variance equilibria on finite event trees"};
    app.add_option("command", cfg.command, "solve-quadratic | solve-linear-mv | verify | frontier | check-conditions | random-suite")
        ->required()
        ->check(CLI::IsMember({"solve-quadratic", "solve-linear-mv", "verify", "frontier", "check-conditions",
                               "random-suite"}));
    app.add_option("--input,-i", cfg.input, "scenario file (JSON)");
    app.add_option("--output,-o", cfg.output, "report file (default: stdout)");
    app.add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--tol", cfg.tol, "absolute tolerance for equality and zero tests");
    app.add_option("--rank-tol", cfg.rank_tol, "relative eigenvalue cutoff for least squares");
    app.add_option("--seed", cfg.seed, "random-suite seed");
    app.add_option("--count", cfg.count, "random-suite scenarios per suite")->check(CLI::PositiveNumber);
    app.add_option("--jobs", cfg.jobs, "random-suite worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : mveq::kParseError;
    }
    return mveq::run(cfg, std::cout, std::cerr);
}
