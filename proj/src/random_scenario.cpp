#include "mveq/random_scenario.hpp"

#include <stdexcept>
#include <vector>

namespace mveq {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 step
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

FiltrationTree random_tree(Rng& rng, int horizon, int max_branching) {
    std::vector<std::vector<int>> children(1);
    std::vector<double> node_prob{1.0};
    std::vector<int> level{0};
    for (int t = 0; t < horizon; ++t) {
        std::vector<int> next;
        for (int p : level) {
            int b = rng.integer(2, max_branching);
            std::vector<double> q(b);
            double total = 0.0;
            for (auto& x : q) total += (x = rng.uniform(0.2, 1.0));
            for (int i = 0; i < b; ++i) {
                int id = static_cast<int>(children.size());
                children.emplace_back();
                node_prob.push_back(node_prob[p] * q[i] / total);
                children[p].push_back(id);
                next.push_back(id);
            }
        }
        level = std::move(next);
    }
    std::vector<double> leaf_probs;
    for (int n : level) leaf_probs.push_back(node_prob[n]);
    // leaves are created in ascending id order, matching the tree's leaf order
    return FiltrationTree::from_children(std::move(children), std::move(leaf_probs));
}

Scenario generate_random_scenario(std::uint64_t seed, const RandomParams& p) {
    if (p.horizon < 1 || p.horizon > 6) throw std::invalid_argument("horizon must be in 1..6");
    if (p.branching < 2 || p.branching > 4) throw std::invalid_argument("branching must be in 2..4");
    if (p.d1 < 0 || p.d1 > 4 || p.d2 < 0 || p.d2 > 4 || p.d1 + p.d2 < 1)
        throw std::invalid_argument("asset counts must be in 0..4 with at least one asset");
    if (p.agents < 1 || p.agents > 5) throw std::invalid_argument("agent count must be in 1..5");

    Rng rng(seed);
    Scenario s;
    s.tree = random_tree(rng, p.horizon, p.branching);
    const auto& tr = s.tree;
    s.d1 = p.d1;
    s.d2 = p.d2;

    s.s0_fin.resize(p.d1);
    for (int j = 0; j < p.d1; ++j) s.s0_fin[j] = rng.uniform(0.5, 2.0);
    s.m_fin = Eigen::MatrixXd::Zero(tr.num_nodes(), p.d1);
    for (int n : tr.inner_nodes()) {
        const auto& ch = tr.children(n);
        for (int j = 0; j < p.d1; ++j) {
            std::vector<double> inc(ch.size());
            double mean = 0.0;
            for (std::size_t i = 0; i < ch.size(); ++i) {
                inc[i] = rng.uniform(-1.0, 1.0);
                mean += tr.cond_prob(ch[i]) * inc[i];
            }
            for (std::size_t i = 0; i < ch.size(); ++i) s.m_fin(ch[i], j) = s.m_fin(n, j) + inc[i] - mean;
        }
    }

    const int leaves = tr.num_leaves();
    s.dividends.resize(leaves, p.d2);
    for (int l = 0; l < leaves; ++l)
        for (int j = 0; j < p.d2; ++j) s.dividends(l, j) = rng.uniform(0.5, 3.0);

    LeafVector xi_bar = LeafVector::Zero(leaves);
    for (int k = 0; k < p.agents; ++k) {
        AgentSpec a;
        a.eta2.resize(p.d2);
        for (int j = 0; j < p.d2; ++j) a.eta2[j] = rng.uniform(0.0, 1.5);
        a.xi_n.resize(leaves);
        for (int l = 0; l < leaves; ++l) a.xi_n[l] = rng.uniform(0.0, 2.0);
        s.agents.push_back(std::move(a));
        xi_bar += total_endowment(s, k);
    }

    std::vector<double> share(p.agents);
    double share_total = 0.0;
    for (auto& x : share) share_total += (x = rng.uniform(0.1, 1.0));
    for (auto& x : share) x /= share_total;

    if (p.kind == PreferenceKind::Quadratic) {
        // keep the aggregate density away from zero on either side
        double gbar = rng.bernoulli(0.8) ? xi_bar.maxCoeff() + rng.uniform(0.5, 5.0)
                                         : xi_bar.minCoeff() - rng.uniform(0.5, 3.0);
        for (int k = 0; k < p.agents; ++k) s.agents[k].preference = Quadratic{share[k] * gbar};
    } else {
        double mean = 0.0;
        for (int l = 0; l < leaves; ++l) mean += tr.leaf_probs()[l] * xi_bar[l];
        double gap = xi_bar.maxCoeff() - mean;
        double lam = rng.bernoulli(0.8) ? gap + rng.uniform(0.1, 3.0) : gap * rng.uniform(0.05, 0.95);
        for (int k = 0; k < p.agents; ++k) s.agents[k].preference = LinearMV{share[k] * lam};
    }
    return s;
}

} // namespace mveq
