#include "mveq/stoch_calc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mveq {

Eigen::VectorXd cond_expect(const FiltrationTree& tree, const LeafVector& x, int t) {
    if (t < 0 || t > tree.horizon()) throw std::out_of_range("time outside 0..T");
    if (x.size() != tree.num_leaves()) throw std::invalid_argument("payoff length != number of leaves");
    const auto& nodes = tree.nodes_at(t);
    Eigen::VectorXd out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double num = 0.0, den = 0.0;
        for (int l : tree.leaves_under(nodes[i])) {
            num += tree.leaf_probs()[l] * x[l];
            den += tree.leaf_probs()[l];
        }
        out[i] = num / den;
    }
    return out;
}

AdaptedProcess martingale_from_terminal(const FiltrationTree& tree, const Eigen::MatrixXd& x) {
    if (x.rows() != tree.num_leaves()) throw std::invalid_argument("payoff rows != number of leaves");
    AdaptedProcess out = AdaptedProcess::Zero(tree.num_nodes(), x.cols());
    for (int t = tree.horizon(); t >= 0; --t)
        for (int n : tree.nodes_at(t)) {
            if (tree.is_leaf(n)) {
                out.row(n) = x.row(tree.leaf_index(n));
            } else {
                for (int c : tree.children(n)) out.row(n) += tree.cond_prob(c) * out.row(c);
            }
        }
    return out;
}

NodeVector martingale_from_terminal(const FiltrationTree& tree, const LeafVector& x) {
    Eigen::MatrixXd m = x;
    return martingale_from_terminal(tree, m).col(0);
}

Eigen::MatrixXd terminal_values(const FiltrationTree& tree, const AdaptedProcess& x) {
    Eigen::MatrixXd out(tree.num_leaves(), x.cols());
    for (int l = 0; l < tree.num_leaves(); ++l) out.row(l) = x.row(tree.leaves()[l]);
    return out;
}

NodeVector bracket_increments(const FiltrationTree& tree, const NodeVector& a, const NodeVector& b) {
    NodeVector out = NodeVector::Zero(tree.num_nodes());
    for (int n : tree.inner_nodes()) {
        double s = 0.0;
        for (int c : tree.children(n)) s += tree.cond_prob(c) * (a[c] - a[n]) * (b[c] - b[n]);
        out[n] = s;
    }
    return out;
}

Eigen::VectorXd delta_bracket(const FiltrationTree& tree, const NodeVector& a, const NodeVector& b,
                              int t, double tol) {
    if (t < 1 || t > tree.horizon()) throw std::out_of_range("bracket time outside 1..T");
    if (!is_martingale(tree, a, tol).pass || !is_martingale(tree, b, tol).pass)
        throw std::invalid_argument("delta_bracket needs martingale inputs");
    NodeVector all = bracket_increments(tree, a, b);
    const auto& nodes = tree.nodes_at(t - 1);
    Eigen::VectorXd out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = all[nodes[i]];
    return out;
}

MartingaleCheck is_martingale(const FiltrationTree& tree, const AdaptedProcess& x, double tol,
                              int from_time) {
    MartingaleCheck r;
    for (int n : tree.inner_nodes()) {
        if (tree.time(n) < from_time) continue;
        for (int j = 0; j < x.cols(); ++j) {
            double e = 0.0;
            for (int c : tree.children(n)) e += tree.cond_prob(c) * (x(c, j) - x(n, j));
            if (!(std::abs(e) <= r.max_residual)) r.max_residual = std::abs(e);
        }
    }
    r.pass = r.max_residual <= tol;
    return r;
}

GkwDecomposition gkw_decompose(const FiltrationTree& tree, const NodeVector& z,
                               const AdaptedProcess& m, double rank_tol) {
    const int d = static_cast<int>(m.cols());
    GkwDecomposition g;
    g.z0 = z[0];
    g.xi = PredictableProcess::Zero(tree.num_nodes(), d);
    g.residual = NodeVector::Zero(tree.num_nodes());

    for (int t = 0; t < tree.horizon(); ++t) {
        for (int n : tree.nodes_at(t)) {
            const auto& ch = tree.children(n);
            const int b = static_cast<int>(ch.size());
            Eigen::VectorXd q(b), dz(b);
            Eigen::MatrixXd v(b, d);
            for (int i = 0; i < b; ++i) {
                q[i] = tree.cond_prob(ch[i]);
                dz[i] = z[ch[i]] - z[n];
                v.row(i) = m.row(ch[i]) - m.row(n);
            }
            auto inner = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
                return (q.array() * x.array() * y.array()).sum();
            };

            // u = v * C with C unit upper triangular; dependent columns dropped
            Eigen::MatrixXd u = v;
            Eigen::MatrixXd c = Eigen::MatrixXd::Identity(d, d);
            std::vector<bool> live(d, false);
            std::vector<double> norm2(d, 0.0);
            double max_var = 0.0;
            for (int i = 0; i < d; ++i) max_var = std::max(max_var, inner(v.col(i), v.col(i)));

            for (int i = 0; i < d; ++i) {
                for (int k = 0; k < i; ++k) {
                    if (!live[k]) continue;
                    double beta = inner(v.col(i), u.col(k)) / norm2[k];
                    u.col(i) -= beta * u.col(k);
                    c.col(i) -= beta * c.col(k);
                }
                norm2[i] = inner(u.col(i), u.col(i));
                live[i] = max_var > 0.0 && norm2[i] > rank_tol * max_var;
            }

            Eigen::VectorXd alpha = Eigen::VectorXd::Zero(d);
            Eigen::VectorXd r = dz;
            for (int i = 0; i < d; ++i) {
                if (!live[i]) continue;
                alpha[i] = inner(r, u.col(i)) / norm2[i];
                r -= alpha[i] * u.col(i);
            }
            Eigen::VectorXd xi = c * alpha;
            g.xi.row(n) = xi.transpose();
            for (int i = 0; i < b; ++i) g.residual[ch[i]] = g.residual[n] + r[i];
        }
    }
    return g;
}

PredictableProcess gkw_integrand_min_norm(const FiltrationTree& tree, const NodeVector& z,
                                          const AdaptedProcess& m, double rank_tol) {
    const int d = static_cast<int>(m.cols());
    PredictableProcess xi = PredictableProcess::Zero(tree.num_nodes(), d);
    if (d == 0) return xi;
    for (int n : tree.inner_nodes()) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
        for (int c : tree.children(n)) {
            Eigen::VectorXd dm = (m.row(c) - m.row(n)).transpose();
            gram += tree.cond_prob(c) * dm * dm.transpose();
            rhs += tree.cond_prob(c) * (z[c] - z[n]) * dm;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        const auto& ev = es.eigenvalues();
        double top = ev.size() ? ev.maxCoeff() : 0.0;
        Eigen::VectorXd sol = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) {
            if (top <= 0.0 || ev[i] <= rank_tol * top) continue;
            const auto vec = es.eigenvectors().col(i);
            sol += vec * (vec.dot(rhs) / ev[i]);
        }
        xi.row(n) = sol.transpose();
    }
    return xi;
}

NodeVector stoch_integral(const FiltrationTree& tree, const PredictableProcess& theta,
                          const AdaptedProcess& s) {
    if (theta.cols() != s.cols()) throw std::invalid_argument("strategy and price dimensions differ");
    NodeVector g = NodeVector::Zero(tree.num_nodes());
    for (int n : tree.inner_nodes())
        for (int c : tree.children(n)) g[c] = g[n] + theta.row(n).dot(s.row(c) - s.row(n));
    return g;
}

NodeVector restarted_increments(const FiltrationTree& tree, const NodeVector& z, double tol) {
    NodeVector dn = NodeVector::Zero(tree.num_nodes());
    for (int n : tree.inner_nodes()) {
        if (std::abs(z[n]) <= tol) continue;
        for (int c : tree.children(n)) dn[c] = (z[c] - z[n]) / z[n];
    }
    return dn;
}

NodeVector restarted_exponential(const FiltrationTree& tree, const NodeVector& z, int s, double tol) {
    if (s < 0 || s > tree.horizon()) throw std::out_of_range("restart time outside 0..T");
    NodeVector dn = restarted_increments(tree, z, tol);
    NodeVector e = NodeVector::Constant(tree.num_nodes(), std::numeric_limits<double>::quiet_NaN());
    for (int n : tree.nodes_at(s)) e[n] = 1.0;
    for (int n : tree.inner_nodes()) {
        if (tree.time(n) < s) continue;
        for (int c : tree.children(n)) e[c] = e[n] * (1.0 + dn[c]);
    }
    return e;
}

} // namespace mveq
