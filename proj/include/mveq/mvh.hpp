#pragma once

#include <optional>
#include <vector>

#include "mveq/process.hpp"
#include "mveq/scenario.hpp"
#include "mveq/tree.hpp"

namespace mveq {

// Linear map from strategy coordinates (one d-vector per inner node, in
// inner_nodes() order) to gains. Coordinate of (n, j) is inner_index(n) * d + j.
class GainsOperator {
public:
    GainsOperator(const FiltrationTree& tree, const AdaptedProcess& prices);

    int dim() const { return d_; }
    int num_coords() const { return static_cast<int>(path_.cols()); }
    // leaves x coords: terminal gains
    const Eigen::MatrixXd& terminal() const { return terminal_; }
    // nodes x coords: gains at every node
    const Eigen::MatrixXd& path() const { return path_; }

    Eigen::VectorXd to_coords(const PredictableProcess& theta) const;
    PredictableProcess to_strategy(const Eigen::VectorXd& coords) const;

private:
    FiltrationTree tree_;
    int d_ = 0;
    Eigen::MatrixXd path_, terminal_;
};

GainsOperator build_gains_operator(const FiltrationTree& tree, const AdaptedProcess& prices);

struct MvhSolution {
    PredictableProcess theta;
    std::optional<double> c; // set for the extended problem
    double sq_error = 0.0;
    bool unique = false;
};

// Factorizes the probability-weighted gains operator once and answers MVH,
// extended MVH and uniqueness queries for one price system. Immutable after
// construction.
class MvhSolver {
public:
    MvhSolver(const FiltrationTree& tree, const AdaptedProcess& prices, const Tolerances& tol = {});

    const FiltrationTree& tree() const { return tree_; }
    const AdaptedProcess& prices() const { return prices_; }
    const GainsOperator& op() const { return op_; }
    const Tolerances& tol() const { return tol_; }

    MvhSolution solve(const LeafVector& h) const;
    MvhSolution solve_ex(const LeafVector& h) const;

    int rank() const { return rank_; }
    bool unique_gains() const { return unique_gains_; }
    // Largest path-gain of a unit kernel direction of the terminal map.
    double kernel_path_residual() const { return kernel_path_residual_; }
    bool unique_values() const { return unique_gains_ && ell_ > tol_.abs; }

    double ell() const { return ell_; }
    const PredictableProcess& theta1() const { return theta1_; }

    LeafVector terminal_gains(const PredictableProcess& theta) const;
    NodeVector gains_path(const PredictableProcess& theta) const;
    double expect(const LeafVector& x) const;
    // max_n |gains path of a - gains path of b|
    double path_distance(const PredictableProcess& a, const PredictableProcess& b) const;

private:
    FiltrationTree tree_;
    AdaptedProcess prices_;
    Tolerances tol_;
    GainsOperator op_;
    Eigen::MatrixXd aug_; // [1 | terminal gains]
    Eigen::VectorXd w_, sqrt_w_;
    Eigen::BDCSVD<Eigen::MatrixXd> svd_, svd_ex_;
    int rank_ = 0;
    bool unique_gains_ = true;
    double kernel_path_residual_ = 0.0;
    double ell_ = 1.0;
    PredictableProcess theta1_;
};

MvhSolution solve_mvh(const FiltrationTree& tree, const AdaptedProcess& prices, const LeafVector& h,
                      const Tolerances& tol = {});
MvhSolution solve_exmvh(const FiltrationTree& tree, const AdaptedProcess& prices,
                        const LeafVector& h, const Tolerances& tol = {});

// c(H) from the pure-investment solution. Throws std::domain_error when the
// denominator (which equals ell) is not above tol.abs.
double c_of_H_formula(const MvhSolver& solver, const LeafVector& h);
double c_of_H_formula(const FiltrationTree& tree, const AdaptedProcess& prices, const LeafVector& h,
                      const Tolerances& tol = {});

struct PureInvestment {
    PredictableProcess theta1;
    double ell = 1.0;
};
PureInvestment pure_investment(const FiltrationTree& tree, const AdaptedProcess& prices,
                               const Tolerances& tol = {});

bool uniqueness_of_gains(const FiltrationTree& tree, const AdaptedProcess& prices,
                         const Tolerances& tol = {});
bool uniqueness_of_values(const FiltrationTree& tree, const AdaptedProcess& prices,
                          const Tolerances& tol = {});

struct ZeroMvhCheck {
    bool zero_optimal = false;
    bool zs_martingale = false;
    double gap = 0.0;          // E[h^2] - min
    double zs_residual = 0.0;  // martingale residual of Z S
};
ZeroMvhCheck zero_solves_mvh_iff(const MvhSolver& solver, const LeafVector& h);
ZeroMvhCheck zero_solves_mvh_iff(const FiltrationTree& tree, const AdaptedProcess& prices,
                                 const LeafVector& h, const Tolerances& tol = {});

struct OpportunityProcess {
    NodeVector L;
    // started[t]: optimal pure-investment strategy using only periods after t
    std::vector<PredictableProcess> started;
    std::optional<NodeVector> v_bar; // mean value process of the supplied payoff
};

// Per-subtree pure-investment solves. Throws std::domain_error unless values
// are unique for the price system.
OpportunityProcess opportunity_process(const FiltrationTree& tree, const AdaptedProcess& prices,
                                       const std::optional<LeafVector>& h_bar = std::nullopt,
                                       const Tolerances& tol = {});

} // namespace mveq
