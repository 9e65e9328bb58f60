#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mveq/process.hpp"
#include "mveq/tree.hpp"

namespace mveq {

struct Tolerances {
    double abs = 1e-9;   // equality / zero tests
    double rank = 1e-10; // relative eigenvalue cutoff in least squares
};

struct Quadratic {
    double gamma = 0.0;
};
struct LinearMV {
    double lambda = 1.0;
};
using Preference = std::variant<Quadratic, LinearMV>;

struct AgentSpec {
    Eigen::VectorXd eta2; // units of each productive asset
    LeafVector xi_n;      // non-traded endowment
    Preference preference;
};

// Plain aggregate; dimensional consistency is checked by validate_scenario.
struct Scenario {
    FiltrationTree tree;
    int d1 = 0;
    int d2 = 0;
    Eigen::VectorXd s0_fin;   // length d1
    AdaptedProcess m_fin;     // nodes x d1, zero at the root
    Eigen::MatrixXd dividends; // leaves x d2
    std::vector<AgentSpec> agents;

    int d() const { return d1 + d2; }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_scenario(const Scenario& s, const Tolerances& tol = {});

// eta2 . D + xi_n, leafwise.
LeafVector total_endowment(const Scenario& s, int k);

// Aggregate buy-and-hold position, zeros on the financial coordinates.
Eigen::VectorXd eta_bar(const Scenario& s);

// Agent k's buy-and-hold strategy as a predictable process.
PredictableProcess buy_and_hold(const FiltrationTree& tree, const Eigen::VectorXd& units);
Eigen::VectorXd agent_eta(const Scenario& s, int k);

bool all_quadratic(const Scenario& s);
bool all_linear_mv(const Scenario& s);

} // namespace mveq
