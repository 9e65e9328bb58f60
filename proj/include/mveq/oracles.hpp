#pragma once

#include "mveq/process.hpp"
#include "mveq/tree.hpp"

// Reference computations that do not go through the mvh solver. Used by the
// unit tests and the randomized suites as independent checks.
namespace mveq::oracle {

// Terminal gains matrix built leaf by leaf along root-to-leaf paths.
Eigen::MatrixXd terminal_gains_matrix(const FiltrationTree& tree, const AdaptedProcess& prices);

// One-period single productive asset with dividend d and aggregate target
// gamma_bar: the price with E[(D - S0)(gamma_bar - D)] = 0.
double one_period_price(const Eigen::VectorXd& probs, const Eigen::VectorXd& d, double gamma_bar);

// One-period one-asset pure investment value 1 - E[dS]^2 / E[dS^2].
double one_period_ell(const Eigen::VectorXd& probs, const Eigen::VectorXd& ds);

// Minimum of Var[xi + vartheta . S_T] subject to E[xi + vartheta . S_T] = mean,
// from the KKT system of the constrained least-squares problem.
double min_variance_at_mean(const FiltrationTree& tree, const AdaptedProcess& prices, const Eigen::VectorXd& xi,
                            double mean);

// Backward recursion for the opportunity process:
// L_n = E[L_c] - a' B^+ a with a = E[L_c dS], B = E[L_c dS dS'].
NodeVector opportunity_backward(const FiltrationTree& tree, const AdaptedProcess& prices, double rank_tol = 1e-12);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};
// Moments of xi + gains of a strategy given in gains-matrix coordinates.
Moments wealth_moments(const FiltrationTree& tree, const Eigen::MatrixXd& gains, const Eigen::VectorXd& xi,
                       const Eigen::VectorXd& coords);

} // namespace mveq::oracle
