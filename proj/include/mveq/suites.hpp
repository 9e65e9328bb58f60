#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mveq/scenario.hpp"

namespace mveq {

struct SuiteOptions {
    std::uint64_t seed = 1;
    int count = 200;
    int jobs = 1; // worker threads; results are merged in index order
    Tolerances tol;
};

struct SuiteResult {
    std::string name;
    int total = 0;
    int passed = 0;
    std::vector<std::string> failures; // first few, in index order
    // worst value per metric over all instances, in first-seen order
    std::vector<std::pair<std::string, double>> worst;
    // counters such as skipped draws, in first-seen order
    std::vector<std::pair<std::string, long>> counts;

    bool ok() const { return total > 0 && passed == total; }
    double metric(const std::string& key) const;
    long count(const std::string& key) const;
};

// Random quadratic markets with a nonvanishing aggregate density: construct,
// verify, representative identity, agent-split invariance, and rejection of
// 20 perturbed price systems per market.
SuiteResult run_quadratic_suite(const SuiteOptions& opt);

// Random LinearMV markets inside the solved class: fixed-point and identity
// residuals, opportunity process at 0 vs ell, brute-force frontier on a
// 10-point grid, efficiency and 500-competitor dominance per agent.
SuiteResult run_linear_mv_suite(const SuiteOptions& opt);

// Random (S, H) pairs, half built so that Z S is a martingale: zero-MVH
// zero-solution criterion agreement, linearity, c(H) formula, plus the cancellation example.
SuiteResult run_mvh_suite(const SuiteOptions& opt);

// Markets whose aggregate density vanishes at the root. Failing necessary
// conditions must give NonexistenceProven and no random candidate price
// system may verify (evidence, not proof); passing ones must verify.
SuiteResult run_degenerate_suite(const SuiteOptions& opt);

} // namespace mveq
