#pragma once

#include <Eigen/Dense>

namespace mveq {

// Node-indexed scalar (one value per tree node).
using NodeVector = Eigen::VectorXd;
// Leaf-indexed scalar, e.g. a terminal payoff.
using LeafVector = Eigen::VectorXd;
// Rows are nodes, columns are components.
using AdaptedProcess = Eigen::MatrixXd;
// Rows are nodes. Row n holds the position carried over (t_n, t_n + 1], so
// it is known at n. Leaf rows are unused and kept at zero.
using PredictableProcess = Eigen::MatrixXd;

} // namespace mveq
