#include <doctest.h>

#include <cmath>

#include "mveq/fixtures.hpp"
#include "mveq/mvh.hpp"
#include "mveq/oracles.hpp"
#include "mveq/random_scenario.hpp"
#include "mveq/stoch_calc.hpp"

using namespace mveq;

namespace {

FiltrationTree coin() { return FiltrationTree::from_children({{1, 2}, {}, {}}, {0.5, 0.5}); }

LeafVector leaf(double a, double b) {
    LeafVector x(2);
    x << a, b;
    return x;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// random (not martingale) prices on a random tree
struct Market {
    FiltrationTree tree;
    AdaptedProcess prices;
};

Market random_market(std::uint64_t seed, int horizon, int d) {
    Rng rng(seed);
    Market m;
    m.tree = random_tree(rng, horizon, 3);
    m.prices.resize(m.tree.num_nodes(), d);
    for (int n = 0; n < m.tree.num_nodes(); ++n)
        for (int j = 0; j < d; ++j) m.prices(n, j) = rng.uniform(0.5, 2.0);
    return m;
}

LeafVector random_payoff(Rng& rng, int n) {
    LeafVector h(n);
    for (int i = 0; i < n; ++i) h[i] = rng.uniform(-2.0, 3.0);
    return h;
}

PredictableProcess random_strategy(Rng& rng, const FiltrationTree& tree, int d, double scale) {
    PredictableProcess th = PredictableProcess::Zero(tree.num_nodes(), d);
    for (int n : tree.inner_nodes())
        for (int j = 0; j < d; ++j) th(n, j) = rng.uniform(-scale, scale);
    return th;
}

} // namespace

TEST_CASE("gains operator examples") {
    auto op = build_gains_operator(coin(), fixtures::scen_a_prices(25.0 / 17.0));
    REQUIRE(op.terminal().rows() == 2);
    REQUIRE(op.terminal().cols() == 1);
    CHECK(op.terminal()(0, 0) == doctest::Approx(9.0 / 17.0));
    CHECK(op.terminal()(1, 0) == doctest::Approx(-8.0 / 17.0));

    AdaptedProcess flat = AdaptedProcess::Constant(3, 2, 1.3);
    CHECK(max_abs(build_gains_operator(coin(), flat).terminal()) == 0.0);

    AdaptedProcess twins(3, 2);
    twins << 1, 2, 2, 3, 0, 1;
    MvhSolver sv(coin(), twins);
    CHECK(sv.rank() == 1);

    CHECK_THROWS_AS(build_gains_operator(coin(), AdaptedProcess::Zero(2, 1)), std::invalid_argument);
}

TEST_CASE("gains operator matches the leaf-path oracle") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        Market m = random_market(seed, 1 + static_cast<int>(seed % 3), 1 + static_cast<int>(seed % 2));
        auto op = build_gains_operator(m.tree, m.prices);
        CHECK(max_abs(op.terminal() - oracle::terminal_gains_matrix(m.tree, m.prices)) < 1e-14);
        Rng rng(seed);
        PredictableProcess th = random_strategy(rng, m.tree, static_cast<int>(m.prices.cols()), 2.0);
        CHECK(max_abs(op.to_strategy(op.to_coords(th)) - th) == 0.0);
        NodeVector path = stoch_integral(m.tree, th, m.prices);
        CHECK(max_abs(op.path() * op.to_coords(th) - path) < 1e-12);
    }
}

TEST_CASE("solve_mvh examples") {
    auto tr = coin();
    AdaptedProcess s = fixtures::scen_a_prices(25.0 / 17.0);
    auto zero = solve_mvh(tr, s, LeafVector::Zero(2));
    CHECK(max_abs(zero.theta) == 0.0);
    CHECK(zero.sq_error == 0.0);

    auto r = solve_mvh(tr, s, leaf(8.0, 9.0));
    CHECK(std::abs(r.theta(0, 0)) < 1e-12);
    CHECK(r.sq_error == doctest::Approx(72.5).epsilon(1e-14));
    CHECK(r.unique);

    // attainable payoff
    Market m = random_market(11, 2, 2);
    Rng rng(5);
    PredictableProcess th0 = random_strategy(rng, m.tree, 2, 1.0);
    MvhSolver sv(m.tree, m.prices);
    auto at = sv.solve(sv.terminal_gains(th0));
    CHECK(at.sq_error < 1e-20);
    if (sv.unique_gains()) CHECK(sv.path_distance(at.theta, th0) < 1e-10);
}

TEST_CASE("solve_exmvh examples") {
    auto tr = coin();
    auto b = solve_exmvh(tr, fixtures::scen_a_prices(1.25), leaf(2.0, 1.0));
    REQUIRE(b.c.has_value());
    CHECK(*b.c == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(b.theta(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b.sq_error < 1e-25);
    CHECK(b.unique);

    // h orthogonal to constants and gains
    auto tr4 = FiltrationTree::from_children({{1, 2, 3, 4}, {}, {}, {}, {}}, {0.25, 0.25, 0.25, 0.25});
    AdaptedProcess s4(5, 1);
    s4 << 1.0, 2.0, 2.0, 0.5, 0.5;
    LeafVector h(4);
    h << 1, -1, 1, -1;
    auto o = solve_exmvh(tr4, s4, h);
    CHECK(std::abs(*o.c) < 1e-14);
    CHECK(std::abs(o.theta(0, 0)) < 1e-14);
    CHECK(o.sq_error == doctest::Approx(1.0));

    // attainable c0 + theta0 . S_T
    Market m = random_market(21, 2, 1);
    MvhSolver sv(m.tree, m.prices);
    REQUIRE(sv.unique_values());
    Rng rng(2);
    PredictableProcess th0 = random_strategy(rng, m.tree, 1, 1.0);
    LeafVector target = (sv.terminal_gains(th0).array() + 0.7).matrix();
    auto a = sv.solve_ex(target);
    CHECK(*a.c == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(a.sq_error < 1e-20);
}

TEST_CASE("stored squared error matches a recomputation") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Market m = random_market(seed, 1 + static_cast<int>(seed % 3), 2);
        MvhSolver sv(m.tree, m.prices);
        Rng rng(seed + 99);
        LeafVector h = random_payoff(rng, m.tree.num_leaves());
        auto r = sv.solve(h);
        CHECK(std::abs(sv.expect((sv.terminal_gains(r.theta) - h).cwiseAbs2()) - r.sq_error) < 1e-12);
        auto e = sv.solve_ex(h);
        LeafVector w = (sv.terminal_gains(e.theta).array() + *e.c).matrix() - h;
        CHECK(std::abs(sv.expect(w.cwiseAbs2()) - e.sq_error) < 1e-12);
    }
}

TEST_CASE("projection optimality and first-order conditions") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const int d = 1 + static_cast<int>(seed % 3);
        Market m = random_market(seed * 7, 1 + static_cast<int>(seed % 3), d);
        MvhSolver sv(m.tree, m.prices);
        Rng rng(seed);
        LeafVector h = random_payoff(rng, m.tree.num_leaves());
        auto r = sv.solve(h);
        LeafVector resid = h - sv.terminal_gains(r.theta);

        for (int c = 0; c < sv.op().num_coords(); ++c) {
            LeafVector basis = sv.op().terminal().col(c);
            CHECK(std::abs(sv.expect(basis.cwiseProduct(resid))) < 1e-10);
        }
        for (int i = 0; i < 100; ++i) {
            PredictableProcess alt = r.theta + random_strategy(rng, m.tree, d, i < 50 ? 0.01 : 3.0);
            double err = sv.expect((sv.terminal_gains(alt) - h).cwiseAbs2());
            CHECK(err >= r.sq_error - 1e-12);
        }
    }
}

TEST_CASE("linearity at the gains-path level") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Market m = random_market(seed + 300, 1 + static_cast<int>(seed % 3), 2);
        MvhSolver sv(m.tree, m.prices);
        Rng rng(seed);
        LeafVector h1 = random_payoff(rng, m.tree.num_leaves());
        LeafVector h2 = random_payoff(rng, m.tree.num_leaves());
        double lam = rng.uniform(-2.0, 2.0);
        PredictableProcess sum = sv.solve(h1).theta + lam * sv.solve(h2).theta;
        CHECK(sv.path_distance(sv.solve(h1 + lam * h2).theta, sum) < 1e-9);
    }
}

TEST_CASE("c_of_H formula examples") {
    auto tr = coin();
    AdaptedProcess mart(3, 1);
    mart << 1.0, 2.0, 0.0;
    LeafVector h = leaf(3.0, -1.0);
    CHECK(c_of_H_formula(tr, mart, h) == doctest::Approx(1.0));

    CHECK(c_of_H_formula(tr, fixtures::scen_a_prices(1.25), leaf(2.0, 1.0)) == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(c_of_H_formula(tr, fixtures::scen_a_prices(1.25), leaf(4.2, 4.2)) == doctest::Approx(4.2).epsilon(1e-14));

    CHECK_THROWS_WITH_AS(c_of_H_formula(tr, fixtures::scen_c_prices(0.5), h), "value-process uniqueness fails",
                         std::domain_error);
}

TEST_CASE("c_of_H formula agrees with the extended solve") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        Market m = random_market(seed + 500, 1 + static_cast<int>(seed % 3), 1 + static_cast<int>(seed % 2));
        MvhSolver sv(m.tree, m.prices);
        if (!sv.unique_values()) continue;
        Rng rng(seed);
        LeafVector h = random_payoff(rng, m.tree.num_leaves());
        CHECK(std::abs(c_of_H_formula(sv, h) - *sv.solve_ex(h).c) < 1e-10);
    }
}

TEST_CASE("pure investment examples") {
    auto tr = coin();
    AdaptedProcess mart(3, 1);
    mart << 1.0, 2.0, 0.0;
    auto pm = pure_investment(tr, mart);
    CHECK(std::abs(pm.theta1(0, 0)) < 1e-15);
    CHECK(pm.ell == doctest::Approx(1.0));

    auto pa = pure_investment(tr, fixtures::scen_a_prices(25.0 / 17.0));
    Eigen::Vector2d probs(0.5, 0.5), ds(9.0 / 17.0, -8.0 / 17.0);
    CHECK(pa.ell == doctest::Approx(289.0 / 290.0).epsilon(1e-14));
    CHECK(pa.ell == doctest::Approx(oracle::one_period_ell(probs, ds)).epsilon(1e-14));

    auto pb = pure_investment(tr, fixtures::scen_a_prices(1.25));
    CHECK(pb.ell == doctest::Approx(0.8).epsilon(1e-14));

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Market m = random_market(seed, 2, 2);
        double ell = pure_investment(m.tree, m.prices).ell;
        CHECK(ell >= -1e-14);
        CHECK(ell <= 1.0 + 1e-14);
    }
}

TEST_CASE("uniqueness of gains") {
    Market one = random_market(3, 1, 2);
    CHECK(uniqueness_of_gains(one.tree, one.prices));
    AdaptedProcess twins(3, 2);
    twins << 1, 2, 2, 3, 0, 1;
    CHECK(uniqueness_of_gains(coin(), twins));

    CHECK_FALSE(uniqueness_of_gains(fixtures::cancellation_tree(), fixtures::cancellation_prices()));
    MvhSolver cs(fixtures::cancellation_tree(), fixtures::cancellation_prices());
    CHECK(cs.kernel_path_residual() > 0.1);
    // theta = 1 in both periods: zero terminal gains, nonzero path
    PredictableProcess k = buy_and_hold(cs.tree(), Eigen::VectorXd::Ones(1));
    CHECK(max_abs(cs.terminal_gains(k)) == 0.0);
    CHECK(max_abs(cs.gains_path(k)) == 1.0);

    auto tr = FiltrationTree::regular_uniform({2, 2});
    CHECK(uniqueness_of_gains(tr, AdaptedProcess::Constant(7, 1, 2.0)));

    // redundant second period only (second asset copies the first)
    Market m = random_market(8, 2, 1);
    AdaptedProcess dup(m.tree.num_nodes(), 2);
    dup << m.prices, m.prices;
    CHECK(uniqueness_of_gains(m.tree, dup));
}

TEST_CASE("uniqueness of values") {
    auto tr = coin();
    AdaptedProcess mart(3, 1);
    mart << 1.0, 2.0, 0.0;
    CHECK(uniqueness_of_values(tr, mart));
    CHECK_FALSE(uniqueness_of_values(tr, fixtures::scen_c_prices(0.5)));
    CHECK(pure_investment(tr, fixtures::scen_c_prices(0.5)).ell < 1e-12);
    CHECK(uniqueness_of_values(tr, fixtures::scen_a_prices(1.25)));
    CHECK_FALSE(uniqueness_of_values(fixtures::cancellation_tree(), fixtures::cancellation_prices()));
}

TEST_CASE("zero MVH solution iff Z S is a martingale: examples") {
    auto tr = coin();
    LeafVector hbar = leaf(8.0, 9.0);
    auto eq = zero_solves_mvh_iff(tr, fixtures::scen_a_prices(25.0 / 17.0), hbar);
    CHECK(eq.zero_optimal);
    CHECK(eq.zs_martingale);

    AdaptedProcess mart(3, 1);
    mart << 1.0, 2.0, 0.0;
    auto one = zero_solves_mvh_iff(tr, mart, LeafVector::Ones(2));
    CHECK(one.zero_optimal);
    CHECK(one.zs_martingale);

    auto off = zero_solves_mvh_iff(tr, fixtures::scen_a_prices(1.6), hbar);
    CHECK_FALSE(off.zero_optimal);
    CHECK_FALSE(off.zs_martingale);
    CHECK(off.gap > 1e-3);
}

TEST_CASE("zero MVH solution criterion agrees on random pairs") {
    int positives = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        Market m = random_market(seed + 900, 1 + static_cast<int>(seed % 3), 1);
        Rng rng(seed);
        LeafVector h = random_payoff(rng, m.tree.num_leaves()).array().abs() + 0.5;
        if (seed % 2 == 0) {
            // make Z S a martingale: S = E[H D | F] / Z
            NodeVector z = martingale_from_terminal(m.tree, h);
            LeafVector dv = random_payoff(rng, m.tree.num_leaves());
            NodeVector num = martingale_from_terminal(m.tree, LeafVector(h.cwiseProduct(dv)));
            m.prices.col(0) = num.cwiseQuotient(z);
        }
        auto r = zero_solves_mvh_iff(m.tree, m.prices, h);
        CHECK(r.zero_optimal == r.zs_martingale);
        positives += r.zero_optimal;
    }
    CHECK(positives == 30);
}

TEST_CASE("opportunity process examples") {
    auto tr = coin();
    AdaptedProcess mart(3, 1);
    mart << 1.0, 2.0, 0.0;
    LeafVector hbar = leaf(8.0, 9.0);
    auto om = opportunity_process(tr, mart, hbar);
    CHECK(max_abs(om.L.array() - 1.0) < 1e-14);
    REQUIRE(om.v_bar.has_value());
    CHECK(max_abs(*om.v_bar - martingale_from_terminal(tr, hbar)) < 1e-12);

    auto ob = opportunity_process(tr, fixtures::scen_a_prices(1.25));
    CHECK(ob.L[0] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(ob.L[1] == 1.0);
    CHECK(ob.L[2] == 1.0);
    CHECK_FALSE(ob.v_bar.has_value());

    CHECK_THROWS_AS(opportunity_process(tr, fixtures::scen_c_prices(0.5)), std::domain_error);
}

TEST_CASE("opportunity process invariants on random markets") {
    int tested = 0;
    for (std::uint64_t seed = 1; seed <= 200 && tested < 20; ++seed) {
        const int T = 2 + static_cast<int>(seed % 2);
        const int d = 1 + static_cast<int>(seed % 2);
        Market m = random_market(seed + 1200, T, d);
        MvhSolver sv(m.tree, m.prices);
        if (!sv.unique_values()) continue;
        ++tested;
        Rng rng(seed);
        LeafVector h = random_payoff(rng, m.tree.num_leaves());
        auto op = opportunity_process(m.tree, m.prices, h);
        const auto& tr = m.tree;

        CHECK(std::abs(op.L[0] - sv.ell()) < 1e-10);
        CHECK(max_abs(op.L - oracle::opportunity_backward(tr, m.prices)) < 1e-10);
        for (int n : tr.leaves()) CHECK(op.L[n] == 1.0);
        CHECK(op.L.minCoeff() > 0.0);
        CHECK(op.L.maxCoeff() <= 1.0 + 1e-12);
        // submartingale: E[L_c | n] >= L_n
        for (int n : tr.inner_nodes()) {
            double e = 0.0;
            for (int c : tr.children(n)) e += tr.cond_prob(c) * op.L[c];
            CHECK(e >= op.L[n] - 1e-12);
        }

        // V-bar ends at H and V-bar M0 is a martingale with M0 = L (1 - theta0 . S)
        const NodeVector& v = *op.v_bar;
        for (int l = 0; l < tr.num_leaves(); ++l) CHECK(std::abs(v[tr.leaves()[l]] - h[l]) < 1e-10);
        NodeVector m0 = op.L.cwiseProduct((1.0 - sv.gains_path(op.started[0]).array()).matrix());
        CHECK(std::abs(m0[0] - sv.ell()) < 1e-10);
        CHECK(is_martingale(tr, m0, 1e-10).pass);
        CHECK(is_martingale(tr, NodeVector(v.cwiseProduct(m0)), 1e-10).pass);
        CHECK(sv.path_distance(op.started[0], sv.theta1()) < 1e-9);
    }
    CHECK(tested >= 20);
}
