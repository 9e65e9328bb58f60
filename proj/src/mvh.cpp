#include "mveq/mvh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mveq/stoch_calc.hpp"

namespace mveq {

namespace {

double top_singular(const Eigen::BDCSVD<Eigen::MatrixXd>& svd) {
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

// Absolute cutoff: sqrt(rank_tol) times the largest singular value of the
// weighted gains operator, but never below the rounding noise of price
// differences.
double gains_cutoff(double gains_top, double rank_tol, double price_scale) {
    return std::max(std::sqrt(rank_tol) * gains_top, 1e-12 * std::max(1.0, price_scale));
}

void set_cutoff(Eigen::BDCSVD<Eigen::MatrixXd>& svd, double cutoff) {
    double top = top_singular(svd);
    svd.setThreshold(top > 0.0 ? cutoff / top : 1.0);
}

// One correction step against the exact normal equations B' W (h - B x) = 0,
// with the residual accumulated in long double. The SVD is of sqrt(W) B, whose
// rounded weights shift the solution when the problem is ill-conditioned.
Eigen::VectorXd refine(const Eigen::BDCSVD<Eigen::MatrixXd>& svd, const Eigen::MatrixXd& b,
                       const Eigen::VectorXd& w, const Eigen::VectorXd& h, Eigen::VectorXd x) {
    const Eigen::Index rank = svd.rank();
    if (rank == 0) return x;
    std::vector<long double> res(static_cast<std::size_t>(b.rows()));
    for (Eigen::Index l = 0; l < b.rows(); ++l) {
        long double a = h[l];
        for (Eigen::Index k = 0; k < b.cols(); ++k) a -= static_cast<long double>(b(l, k)) * x[k];
        res[l] = a * w[l];
    }
    Eigen::VectorXd grad(b.cols());
    for (Eigen::Index k = 0; k < b.cols(); ++k) {
        long double a = 0.0L;
        for (Eigen::Index l = 0; l < b.rows(); ++l) a += static_cast<long double>(b(l, k)) * res[l];
        grad[k] = static_cast<double>(a);
    }
    auto v = svd.matrixV().leftCols(rank);
    Eigen::VectorXd sig2 = svd.singularValues().head(rank).cwiseAbs2();
    x += v * (v.transpose() * grad).cwiseQuotient(sig2);
    return x;
}

double scale_of(const AdaptedProcess& prices) { return prices.size() ? prices.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

GainsOperator::GainsOperator(const FiltrationTree& tree, const AdaptedProcess& prices)
    : tree_(tree), d_(static_cast<int>(prices.cols())) {
    if (prices.rows() != tree.num_nodes()) throw std::invalid_argument("prices need one row per node");
    const int coords = static_cast<int>(tree.inner_nodes().size()) * d_;
    path_ = Eigen::MatrixXd::Zero(tree.num_nodes(), coords);
    for (int p : tree.inner_nodes()) {
        const int base = tree.inner_index(p) * d_;
        for (int c : tree.children(p)) {
            path_.row(c) = path_.row(p);
            path_.block(c, base, 1, d_) = prices.row(c) - prices.row(p);
        }
    }
    terminal_.resize(tree.num_leaves(), coords);
    for (int l = 0; l < tree.num_leaves(); ++l) terminal_.row(l) = path_.row(tree.leaves()[l]);
}

Eigen::VectorXd GainsOperator::to_coords(const PredictableProcess& theta) const {
    if (theta.rows() != tree_.num_nodes() || theta.cols() != d_)
        throw std::invalid_argument("strategy shape does not match the price process");
    Eigen::VectorXd x(num_coords());
    for (int n : tree_.inner_nodes()) x.segment(tree_.inner_index(n) * d_, d_) = theta.row(n).transpose();
    return x;
}

PredictableProcess GainsOperator::to_strategy(const Eigen::VectorXd& coords) const {
    PredictableProcess th = PredictableProcess::Zero(tree_.num_nodes(), d_);
    for (int n : tree_.inner_nodes()) th.row(n) = coords.segment(tree_.inner_index(n) * d_, d_).transpose();
    return th;
}

GainsOperator build_gains_operator(const FiltrationTree& tree, const AdaptedProcess& prices) {
    return GainsOperator(tree, prices);
}

MvhSolver::MvhSolver(const FiltrationTree& tree, const AdaptedProcess& prices, const Tolerances& tol)
    : tree_(tree), prices_(prices), tol_(tol), op_(tree, prices) {
    const int leaves = tree.num_leaves();
    w_ = Eigen::Map<const Eigen::VectorXd>(tree.leaf_probs().data(), leaves);
    sqrt_w_ = w_.cwiseSqrt();
    const double scale = scale_of(prices);

    Eigen::MatrixXd a = sqrt_w_.asDiagonal() * op_.terminal();
    svd_.compute(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // the extended problem uses the same absolute level so both agree on
    // which strategies are S-equivalent to zero
    const double cutoff = gains_cutoff(top_singular(svd_), tol.rank, scale);
    set_cutoff(svd_, cutoff);
    rank_ = static_cast<int>(svd_.rank());

    aug_.resize(leaves, a.cols() + 1);
    aug_.col(0).setOnes();
    aug_.rightCols(a.cols()) = op_.terminal();
    Eigen::MatrixXd a_ex = sqrt_w_.asDiagonal() * aug_;
    svd_ex_.compute(a_ex, Eigen::ComputeThinU | Eigen::ComputeThinV);
    set_cutoff(svd_ex_, cutoff);

    // Kernel of the terminal map = complement of the row space spanned by the
    // leading right singular vectors. Path gains must vanish on it.
    const Eigen::MatrixXd& p = op_.path();
    if (p.cols() > 0) {
        Eigen::MatrixXd vr = svd_.matrixV().leftCols(rank_);
        Eigen::MatrixXd off_kernel = p - (p * vr) * vr.transpose();
        kernel_path_residual_ = off_kernel.cwiseAbs().maxCoeff();
        double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
        unique_gains_ = kernel_path_residual_ <= std::max(tol.abs, 1e-12) * scale;
    }

    MvhSolution one = solve(LeafVector::Ones(leaves));
    theta1_ = one.theta;
    ell_ = one.sq_error;
}

MvhSolution MvhSolver::solve(const LeafVector& h) const {
    if (h.size() != tree_.num_leaves()) throw std::invalid_argument("payoff length != number of leaves");
    Eigen::VectorXd x = refine(svd_, op_.terminal(), w_, h, svd_.solve(sqrt_w_.cwiseProduct(h)));
    MvhSolution s;
    s.theta = op_.to_strategy(x);
    LeafVector r = op_.terminal() * x - h;
    s.sq_error = w_.dot(r.cwiseAbs2());
    s.unique = unique_gains_;
    return s;
}

MvhSolution MvhSolver::solve_ex(const LeafVector& h) const {
    if (h.size() != tree_.num_leaves()) throw std::invalid_argument("payoff length != number of leaves");
    Eigen::VectorXd x = refine(svd_ex_, aug_, w_, h, svd_ex_.solve(sqrt_w_.cwiseProduct(h)));
    MvhSolution s;
    s.c = x[0];
    Eigen::VectorXd coords = x.tail(x.size() - 1);
    s.theta = op_.to_strategy(coords);
    LeafVector r = (op_.terminal() * coords).array() + x[0] - h.array();
    s.sq_error = w_.dot(r.cwiseAbs2());
    s.unique = unique_values();
    return s;
}

LeafVector MvhSolver::terminal_gains(const PredictableProcess& theta) const {
    return op_.terminal() * op_.to_coords(theta);
}

NodeVector MvhSolver::gains_path(const PredictableProcess& theta) const {
    return op_.path() * op_.to_coords(theta);
}

double MvhSolver::expect(const LeafVector& x) const { return w_.dot(x); }

double MvhSolver::path_distance(const PredictableProcess& a, const PredictableProcess& b) const {
    NodeVector diff = op_.path() * (op_.to_coords(a) - op_.to_coords(b));
    return diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
}

MvhSolution solve_mvh(const FiltrationTree& tree, const AdaptedProcess& prices, const LeafVector& h,
                      const Tolerances& tol) {
    return MvhSolver(tree, prices, tol).solve(h);
}

MvhSolution solve_exmvh(const FiltrationTree& tree, const AdaptedProcess& prices, const LeafVector& h,
                        const Tolerances& tol) {
    return MvhSolver(tree, prices, tol).solve_ex(h);
}

double c_of_H_formula(const MvhSolver& solver, const LeafVector& h) {
    // E[H (1 - g1)] equals E[(H - theta_MVH(H) . S_T)(1 - g1)] because 1 - g1 is
    // orthogonal to all gains. The second form cancels solver error to first
    // order; residuals are accumulated in long double since 1 - g1 is small
    // when ell is.
    const Eigen::MatrixXd& g = solver.op().terminal();
    const auto& w = solver.tree().leaf_probs();
    Eigen::VectorXd x1 = solver.op().to_coords(solver.theta1());
    Eigen::VectorXd xh = solver.op().to_coords(solver.solve(h).theta);
    long double num = 0.0L, den = 0.0L;
    for (int l = 0; l < g.rows(); ++l) {
        long double r1 = 1.0L, rh = h[l];
        for (int k = 0; k < g.cols(); ++k) {
            r1 -= static_cast<long double>(g(l, k)) * x1[k];
            rh -= static_cast<long double>(g(l, k)) * xh[k];
        }
        num += w[l] * r1 * rh;
        den += w[l] * r1 * r1;
    }
    if (den <= solver.tol().abs) throw std::domain_error("value-process uniqueness fails");
    return static_cast<double>(num / den);
}

double c_of_H_formula(const FiltrationTree& tree, const AdaptedProcess& prices, const LeafVector& h,
                      const Tolerances& tol) {
    return c_of_H_formula(MvhSolver(tree, prices, tol), h);
}

PureInvestment pure_investment(const FiltrationTree& tree, const AdaptedProcess& prices,
                               const Tolerances& tol) {
    MvhSolver s(tree, prices, tol);
    return {s.theta1(), s.ell()};
}

bool uniqueness_of_gains(const FiltrationTree& tree, const AdaptedProcess& prices, const Tolerances& tol) {
    return MvhSolver(tree, prices, tol).unique_gains();
}

bool uniqueness_of_values(const FiltrationTree& tree, const AdaptedProcess& prices, const Tolerances& tol) {
    return MvhSolver(tree, prices, tol).unique_values();
}

ZeroMvhCheck zero_solves_mvh_iff(const MvhSolver& solver, const LeafVector& h) {
    const auto& tree = solver.tree();
    const auto& s = solver.prices();
    ZeroMvhCheck r;
    double e_h2 = solver.expect(h.cwiseAbs2());
    r.gap = std::max(0.0, e_h2 - solver.solve(h).sq_error);
    r.zero_optimal = r.gap <= solver.tol().abs * (1.0 + e_h2);

    NodeVector z = martingale_from_terminal(tree, h);
    AdaptedProcess zs = z.asDiagonal() * s;
    double scale = zs.size() ? zs.cwiseAbs().maxCoeff() : 0.0;
    r.zs_residual = is_martingale(tree, zs).max_residual;
    r.zs_martingale = r.zs_residual <= solver.tol().abs * (1.0 + scale);
    return r;
}

ZeroMvhCheck zero_solves_mvh_iff(const FiltrationTree& tree, const AdaptedProcess& prices,
                                 const LeafVector& h, const Tolerances& tol) {
    return zero_solves_mvh_iff(MvhSolver(tree, prices, tol), h);
}

OpportunityProcess opportunity_process(const FiltrationTree& tree, const AdaptedProcess& prices,
                                       const std::optional<LeafVector>& h_bar, const Tolerances& tol) {
    MvhSolver full(tree, prices, tol);
    if (!full.unique_values())
        throw std::domain_error("opportunity process needs unique value processes");

    const int T = tree.horizon();
    const int d = static_cast<int>(prices.cols());
    const auto& g = full.op().terminal();

    OpportunityProcess op;
    op.L = NodeVector::Ones(tree.num_nodes());
    op.started.assign(T + 1, PredictableProcess::Zero(tree.num_nodes(), d));

    for (int t = 0; t < T; ++t) {
        for (int n : tree.nodes_at(t)) {
            std::vector<int> cols;
            for (int m : tree.inner_nodes())
                if (tree.time(m) >= t && tree.ancestor_at(m, t) == n)
                    for (int j = 0; j < d; ++j) cols.push_back(tree.inner_index(m) * d + j);
            const auto& rows = tree.leaves_under(n);
            const int nr = static_cast<int>(rows.size());
            const int nc = static_cast<int>(cols.size());

            Eigen::VectorXd w(nr);
            Eigen::MatrixXd a(nr, nc);
            for (int i = 0; i < nr; ++i) {
                w[i] = tree.leaf_probs()[rows[i]] / tree.prob(n);
                for (int k = 0; k < nc; ++k) a(i, k) = g(rows[i], cols[k]);
            }
            Eigen::VectorXd sw = w.cwiseSqrt();
            Eigen::BDCSVD<Eigen::MatrixXd> svd(sw.asDiagonal() * a, Eigen::ComputeThinU | Eigen::ComputeThinV);
            set_cutoff(svd, gains_cutoff(top_singular(svd), tol.rank, scale_of(prices)));
            Eigen::VectorXd x = svd.solve(sw);
            Eigen::VectorXd r = Eigen::VectorXd::Ones(nr) - a * x;
            op.L[n] = w.dot(r.cwiseAbs2());

            for (int k = 0; k < nc; ++k) {
                int m = tree.inner_nodes()[cols[k] / d];
                op.started[t](m, cols[k] % d) = x[k];
            }
        }
    }

    if (h_bar) {
        NodeVector v = NodeVector::Zero(tree.num_nodes());
        for (int t = 0; t <= T; ++t) {
            LeafVector rest = LeafVector::Ones(tree.num_leaves()) - full.terminal_gains(op.started[t]);
            LeafVector num = h_bar->cwiseProduct(rest);
            Eigen::VectorXd ce = cond_expect(tree, num, t);
            const auto& nodes = tree.nodes_at(t);
            for (std::size_t i = 0; i < nodes.size(); ++i) v[nodes[i]] = ce[i] / op.L[nodes[i]];
        }
        op.v_bar = v;
    }
    return op;
}

} // namespace mveq
