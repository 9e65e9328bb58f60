#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mveq/mvh.hpp"
#include "mveq/scenario.hpp"

namespace mveq {

struct AggregateState {
    double gamma_bar = 0.0;
    LeafVector xi_bar;
    LeafVector h_bar;
    NodeVector z_bar;
    Eigen::VectorXd eta_bar; // length d1 + d2, zero on financial coordinates
};

// Throws std::invalid_argument unless every agent is quadratic.
AggregateState aggregate(const Scenario& s);
// Same aggregates with an externally chosen gamma_bar; preferences ignored.
AggregateState aggregate_for_gamma(const Scenario& s, double gamma_bar);

struct NonexistenceProven : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RequiresDegenerate : std::domain_error {
    using std::domain_error::domain_error;
};

// Closed-form prices when Z-bar never vanishes. Throws RequiresDegenerate
// if |Z-bar| <= tol.abs at some node.
AdaptedProcess construct_regular(const Scenario& s, const Tolerances& tol = {});
AdaptedProcess construct_regular(const Scenario& s, const AggregateState& agg, const Tolerances& tol = {});

// Drift increment of each financial asset over (t_n, t_n + 1], stored at n.
// Zero where Z-bar vanishes.
Eigen::MatrixXd financial_drift(const Scenario& s, const AggregateState& agg,
                                const PredictableProcess& xi, const Tolerances& tol);

struct ConditionEntry {
    int asset = 0; // 0-based index among financial (cond_xi) or productive (cond_g) assets
    int time = 0;
    bool pass = true;
    double worst = 0.0;  // largest offending magnitude on {Z-bar = 0}
    int worst_node = -1; // -1 when no node at this time has Z-bar = 0
};

struct NecessaryConditions {
    std::vector<ConditionEntry> cond_xi; // t = 1..T
    std::vector<ConditionEntry> cond_g;  // t = 0..T-1
    bool pass() const;
    std::string first_failure() const;
};

NecessaryConditions check_necessary_conditions(const Scenario& s, const Tolerances& tol = {});
NecessaryConditions check_necessary_conditions(const Scenario& s, const AggregateState& agg,
                                               const Tolerances& tol = {});

struct DegenerateConstruction {
    AdaptedProcess prices;
    // martingale residual of the restarted exponential for each restart time
    std::vector<double> restart_residuals;
    bool restarts_are_martingales = true;
};

// Throws NonexistenceProven when the necessary conditions fail.
DegenerateConstruction construct_degenerate(const Scenario& s, const Tolerances& tol = {});
DegenerateConstruction construct_degenerate(const Scenario& s, const AggregateState& agg,
                                            const Tolerances& tol = {});

struct IndividualOptimum {
    PredictableProcess theta;
    PredictableProcess decomposition; // eta - theta_ex(Xi) + (gamma - c) theta_MVH(1)
    bool decomposition_checked = false; // only when values are unique
    double decomposition_residual = 0.0;
    double c = 0.0;
};

IndividualOptimum individual_optimal(const Scenario& s, const MvhSolver& solver, int k, double gamma);
// Uses the agent's own quadratic gamma.
IndividualOptimum individual_optimal(const Scenario& s, const AdaptedProcess& prices, int k,
                                     const Tolerances& tol = {});

struct RepresentativeCheck {
    bool pass = false;
    double residual = 0.0;
};
RepresentativeCheck representative_check(const Scenario& s, const MvhSolver& solver,
                                         const std::vector<double>& gammas);
RepresentativeCheck representative_check(const Scenario& s, const AdaptedProcess& prices,
                                         const Tolerances& tol = {});

enum class Verdict { Equilibrium, NotEquilibrium, NonexistenceProven };
const char* verdict_name(Verdict v);

struct EquilibriumReport {
    Verdict verdict = Verdict::NotEquilibrium;
    std::string reason;
    std::string construction; // "regular", "degenerate" or "supplied"
    AdaptedProcess prices;
    std::vector<double> gammas;
    std::vector<PredictableProcess> agent_strategies;
    std::vector<double> optimality_gaps;
    std::vector<double> decomposition_residuals;
    double terminal_residual = 0.0;
    double financial_residual = 0.0;
    double clearing_residual = 0.0;          // path level
    double clearing_terminal_residual = 0.0; // terminal gains only
    double martingale_residual = 0.0;
    double representative_residual = 0.0;
    bool unique_gains = false;
    bool unique_values = false;
    double ell = 0.0;
    std::optional<NecessaryConditions> conditions;
    std::vector<double> restart_residuals;
};

// From-scratch check of the equilibrium conditions for a supplied price
// system with the agents' own quadratic targets. LinearMV agents are
// handled through their equivalent targets c_k + lambda_k / ell.
EquilibriumReport verify_equilibrium(const Scenario& s, const AdaptedProcess& prices,
                                     const Tolerances& tol = {});
EquilibriumReport verify_equilibrium(const Scenario& s, const AdaptedProcess& prices,
                                     const std::vector<double>& gammas, const Tolerances& tol = {});

// Regular construction if possible, else the degenerate one after checking
// the necessary conditions; then verification.
EquilibriumReport solve_quadratic(const Scenario& s, const Tolerances& tol = {});

} // namespace mveq
