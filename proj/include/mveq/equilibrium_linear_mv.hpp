#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "mveq/equilibrium_quadratic.hpp"
#include "mveq/mvh.hpp"
#include "mveq/scenario.hpp"

namespace mveq {

struct GammaBar {
    double gamma_bar = 0.0;
    double gamma_bar_0 = 0.0; // max leaf value of the aggregate endowment
    double mean_xi_bar = 0.0;
    double lambda_sum = 0.0;
    bool exists = false;
};

// Throws std::invalid_argument for non-LinearMV agents or a negative aggregate endowment.
GammaBar gamma_bar_fixed_point(const Scenario& s, const Tolerances& tol = {});

struct FrontierData {
    double ell = 1.0;
    double c = 0.0;
    double eps2 = 0.0;

    double mean(double y) const { return c + (1.0 - ell) * y; }
    double sigma(double y) const { return std::sqrt(eps2 + ell * (1.0 - ell) * y * y); }
};

// Throws std::domain_error unless values are unique for the prices.
FrontierData agent_frontier(const Scenario& s, const MvhSolver& solver, int k);
FrontierData agent_frontier(const Scenario& s, const AdaptedProcess& prices, int k, const Tolerances& tol = {});

struct MvStrategy {
    double y = 0.0;
    PredictableProcess theta;
};

// theta = y theta_MVH(1) + eta - theta_ex(Xi) for a given y >= 0.
PredictableProcess efficient_strategy(const Scenario& s, const MvhSolver& solver, int k, double y);

MvStrategy optimal_mv_strategy(const Scenario& s, const MvhSolver& solver, int k);
MvStrategy optimal_mv_strategy(const Scenario& s, const AdaptedProcess& prices, int k, const Tolerances& tol = {});

struct EfficiencyCheck {
    bool pass = false;
    double y = 0.0;
    double path_residual = 0.0;     // centered strategy vs y theta_MVH(1)
    double mean = 0.0;              // of terminal wealth
    double variance = 0.0;
    double frontier_residual = 0.0; // max of mean and variance mismatch
};

EfficiencyCheck mv_efficiency_check(const Scenario& s, const MvhSolver& solver, const PredictableProcess& theta,
                                    int k);
EfficiencyCheck mv_efficiency_check(const Scenario& s, const AdaptedProcess& prices, const PredictableProcess& theta,
                                    int k, const Tolerances& tol = {});

struct FixedPointResiduals {
    double fp_residual = 0.0;
    double identity_residual = 0.0;
};

FixedPointResiduals verify_fixed_point(const Scenario& s, const MvhSolver& solver, double gamma_bar);
FixedPointResiduals verify_fixed_point(const Scenario& s, const AdaptedProcess& prices, double gamma_bar,
                                       const Tolerances& tol = {});

struct AgentMvData {
    double lambda = 0.0;
    FrontierData frontier;
    double y = 0.0;
    PredictableProcess strategy;
};

struct MvEquilibriumReport {
    GammaBar gamma;
    bool exists = false;
    // all brackets with the aggregate density at gamma_bar_0 vanish: prices are
    // martingales and every lambda profile equilibrates
    bool trivial_regime = false;
    AdaptedProcess prices;
    double ell = 1.0;
    std::vector<AgentMvData> agents;
    FixedPointResiduals residuals;
    double opportunity_l0 = 0.0;
    double l0_residual = 0.0;
    double clearing_residual = 0.0;
    bool verified = false;
};

MvEquilibriumReport solve_linear_mv(const Scenario& s, const Tolerances& tol = {});

} // namespace mveq
