#pragma once

#include "mveq/process.hpp"
#include "mveq/tree.hpp"

namespace mveq {

// E[x | F_t] on the nodes of time t, in nodes_at(t) order.
Eigen::VectorXd cond_expect(const FiltrationTree& tree, const LeafVector& x, int t);

// Martingale E[x | F_t] as a node-indexed process (one column per column of x).
AdaptedProcess martingale_from_terminal(const FiltrationTree& tree, const Eigen::MatrixXd& x);
NodeVector martingale_from_terminal(const FiltrationTree& tree, const LeafVector& x);

// Leaf values of an adapted process.
Eigen::MatrixXd terminal_values(const FiltrationTree& tree, const AdaptedProcess& x);

// E[da db | F_{t-1}] on the nodes of time t-1. Throws std::invalid_argument
// if a or b has conditional drift above tol.
Eigen::VectorXd delta_bracket(const FiltrationTree& tree, const NodeVector& a,
                              const NodeVector& b, int t, double tol = 1e-9);

// Unchecked bracket increments for all periods: entry n is the increment
// over (t_n, t_n + 1]; leaf entries are zero.
NodeVector bracket_increments(const FiltrationTree& tree, const NodeVector& a,
                              const NodeVector& b);

struct MartingaleCheck {
    double max_residual = 0.0;
    bool pass = true;
};

// Largest |E[x_t - x_{t-1} | F_{t-1}]| over periods starting at from_time or later.
MartingaleCheck is_martingale(const FiltrationTree& tree, const AdaptedProcess& x,
                              double tol = 1e-9, int from_time = 0);

struct GkwDecomposition {
    PredictableProcess xi; // nodes x d1
    NodeVector residual;   // orthogonal martingale part, zero at the root
    double z0 = 0.0;
};

// z = z0 + xi . m + residual, with the integrand built by Gram-Schmidt over
// the increments of m at every node. Directions with (relative) zero
// conditional variance get xi = 0.
GkwDecomposition gkw_decompose(const FiltrationTree& tree, const NodeVector& z,
                               const AdaptedProcess& m, double rank_tol = 1e-10);

// Alternative integrand: minimal-norm solution of the conditional normal
// equations. Differs from the Gram-Schmidt one only when m is degenerate.
PredictableProcess gkw_integrand_min_norm(const FiltrationTree& tree, const NodeVector& z,
                                          const AdaptedProcess& m, double rank_tol = 1e-10);

// (theta . s)_t, zero at the root.
NodeVector stoch_integral(const FiltrationTree& tree, const PredictableProcess& theta,
                          const AdaptedProcess& s);

// dN_t = dZ_t / Z_{t-1} where |Z_{t-1}| > tol, else 0. Leaf/root handling as
// for bracket_increments: entry c is the increment into node c.
NodeVector restarted_increments(const FiltrationTree& tree, const NodeVector& z, double tol);

// prod_{k=s+1..t} (1 + dN_k) on nodes with time >= s; NaN before s.
NodeVector restarted_exponential(const FiltrationTree& tree, const NodeVector& z, int s,
                                 double tol = 1e-9);

} // namespace mveq
