#pragma once

#include "mveq/scenario.hpp"

// Small hand-checkable markets used by tests and the acceptance run.
namespace mveq::fixtures {

// One period, two equally likely states, one productive asset with D = (2, 1),
// one quadratic agent holding the asset, gamma = 10.
Scenario scen_a();
// Same aggregate as scen_a split over two agents (gamma 4 and 6).
Scenario scen_a_split();
// Same market with one LinearMV agent.
Scenario scen_b(double lambda = 1.0);
// Two LinearMV agents with lambda 0.5 each; only the first holds the asset.
Scenario scen_b_two_agents();
// One financial asset with dM = +-1, gamma = 4, non-traded endowment 2 + M_1.
Scenario scen_d(double s0 = 1.0);
// Aggregate density vanishes at the root but E[H D] = 0 (D = 1).
Scenario scen_c();
// Aggregate density vanishes at the root and E[H D] != 0 (D = (2, 1)).
Scenario scen_c_prime();

// Prices of scen_a with the given root price.
AdaptedProcess scen_a_prices(double s0);
// Prices of scen_c with the given root price.
AdaptedProcess scen_c_prices(double s0);

// Two-period binary tree whose second increment cancels the first on every
// path: S_0 = 0, S = +1 / -1 at time 1, S = 0 at time 2.
FiltrationTree cancellation_tree();
AdaptedProcess cancellation_prices();

} // namespace mveq::fixtures
