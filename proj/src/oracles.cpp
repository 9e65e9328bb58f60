#include "mveq/oracles.hpp"

#include <stdexcept>

namespace mveq::oracle {

Eigen::MatrixXd terminal_gains_matrix(const FiltrationTree& tree, const AdaptedProcess& prices) {
    const int d = static_cast<int>(prices.cols());
    const int T = tree.horizon();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(tree.num_leaves(), static_cast<Eigen::Index>(tree.inner_nodes().size()) * d);
    for (int l = 0; l < tree.num_leaves(); ++l) {
        int leaf = tree.leaves()[l];
        for (int t = 0; t < T; ++t) {
            int n = tree.ancestor_at(leaf, t);
            int c = tree.ancestor_at(leaf, t + 1);
            for (int j = 0; j < d; ++j) g(l, tree.inner_index(n) * d + j) = prices(c, j) - prices(n, j);
        }
    }
    return g;
}

double one_period_price(const Eigen::VectorXd& probs, const Eigen::VectorXd& d, double gamma_bar) {
    Eigen::ArrayXd h = gamma_bar - d.array();
    return (probs.array() * d.array() * h).sum() / (probs.array() * h).sum();
}

double one_period_ell(const Eigen::VectorXd& probs, const Eigen::VectorXd& ds) {
    double m1 = probs.dot(ds);
    double m2 = probs.dot(ds.cwiseAbs2());
    return 1.0 - m1 * m1 / m2;
}

double min_variance_at_mean(const FiltrationTree& tree, const AdaptedProcess& prices, const Eigen::VectorXd& xi,
                            double mean) {
    Eigen::MatrixXd g = terminal_gains_matrix(tree, prices);
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(tree.leaf_probs().data(), tree.num_leaves());
    const Eigen::Index n = g.cols();

    // minimize E[(xi + G v)^2] subject to E[xi + G v] = mean
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = 2.0 * g.transpose() * w.asDiagonal() * g;
    Eigen::VectorXd gw = g.transpose() * w;
    kkt.topRightCorner(n, 1) = gw;
    kkt.bottomLeftCorner(1, n) = gw.transpose();
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -2.0 * g.transpose() * w.cwiseProduct(xi);
    rhs[n] = mean - w.dot(xi);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
    cod.setThreshold(1e-13);
    Eigen::VectorXd sol = cod.solve(rhs);
    Eigen::VectorXd v = xi + g * sol.head(n);
    double m = w.dot(v);
    return w.dot(v.cwiseAbs2()) - m * m;
}

NodeVector opportunity_backward(const FiltrationTree& tree, const AdaptedProcess& prices, double rank_tol) {
    const int d = static_cast<int>(prices.cols());
    NodeVector l = NodeVector::Ones(tree.num_nodes());
    for (int t = tree.horizon() - 1; t >= 0; --t)
        for (int n : tree.nodes_at(t)) {
            double el = 0.0;
            Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
            for (int c : tree.children(n)) {
                double q = tree.cond_prob(c) * l[c];
                Eigen::VectorXd ds = (prices.row(c) - prices.row(n)).transpose();
                el += q;
                a += q * ds;
                b += q * ds * ds.transpose();
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
            double top = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
            double quad = 0.0;
            for (int i = 0; i < d; ++i) {
                double ev = es.eigenvalues()[i];
                if (top <= 0.0 || ev <= rank_tol * top) continue;
                double proj = es.eigenvectors().col(i).dot(a);
                quad += proj * proj / ev;
            }
            l[n] = el - quad;
        }
    return l;
}

Moments wealth_moments(const FiltrationTree& tree, const Eigen::MatrixXd& gains, const Eigen::VectorXd& xi,
                       const Eigen::VectorXd& coords) {
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(tree.leaf_probs().data(), tree.num_leaves());
    Eigen::VectorXd v = xi + gains * coords;
    Moments m;
    m.mean = w.dot(v);
    m.variance = w.dot((v.array() - m.mean).matrix().cwiseAbs2());
    return m;
}

} // namespace mveq::oracle
