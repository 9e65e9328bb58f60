#pragma once

#include <cstdint>
#include <random>

#include "mveq/scenario.hpp"

namespace mveq {

// mt19937_64 with explicit integer-to-double conversions, so a seed gives the
// same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    bool bernoulli(double p) { return uniform01() < p; }
    std::uint64_t next() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

// Independent per-item seed derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

enum class PreferenceKind { Quadratic, LinearMV };

struct RandomParams {
    int horizon = 2;   // 1..6
    int branching = 2; // maximum children per node, 2..4
    int d1 = 1;        // 0..4
    int d2 = 1;        // 0..4, d1 + d2 >= 1
    int agents = 2;    // 1..5
    PreferenceKind kind = PreferenceKind::Quadratic;
};

// Throws std::invalid_argument when params are outside the bounds above.
Scenario generate_random_scenario(std::uint64_t seed, const RandomParams& params);

// Random tree only: children counts drawn from 2..max_branching, conditional
// probabilities from (0.2, 1) normalized.
FiltrationTree random_tree(Rng& rng, int horizon, int max_branching);

} // namespace mveq
