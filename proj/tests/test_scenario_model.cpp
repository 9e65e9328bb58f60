#include <doctest.h>

#include <algorithm>

#include "mveq/equilibrium_linear_mv.hpp"
#include "mveq/fixtures.hpp"
#include "mveq/random_scenario.hpp"
#include "mveq/scenario.hpp"
#include "mveq/scenario_io.hpp"

using namespace mveq;

namespace {

Scenario one_period_fin(double p_up, double m_up, double m_down) {
    Scenario s;
    s.tree = FiltrationTree::from_children({{1, 2}, {}, {}}, {p_up, 1.0 - p_up});
    s.d1 = 1;
    s.d2 = 0;
    s.s0_fin = Eigen::VectorXd::Constant(1, 1.0);
    s.m_fin.resize(3, 1);
    s.m_fin << 0.0, m_up, m_down;
    s.dividends = Eigen::MatrixXd::Zero(2, 0);
    AgentSpec a;
    a.eta2.resize(0);
    a.xi_n = Eigen::VectorXd::Zero(2);
    a.preference = Quadratic{1.0};
    s.agents.push_back(a);
    return s;
}

bool mentions(const ValidationReport& r, const std::string& text) {
    return std::any_of(r.violations.begin(), r.violations.end(),
                       [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

} // namespace

TEST_CASE("tree structure and probabilities") {
    auto tr = FiltrationTree::from_children({{1, 2}, {3, 4}, {5}, {}, {}, {}}, {0.2, 0.3, 0.5});
    CHECK(tr.horizon() == 2);
    CHECK(tr.num_nodes() == 6);
    CHECK(tr.leaves() == std::vector<int>{3, 4, 5});
    CHECK(tr.leaf_index(4) == 1);
    CHECK(tr.leaf_index(1) == -1);
    CHECK(tr.prob(1) == doctest::Approx(0.5));
    CHECK(tr.prob(2) == doctest::Approx(0.5));
    CHECK(tr.prob(0) == doctest::Approx(1.0));
    CHECK(tr.cond_prob(3) == doctest::Approx(0.4));
    CHECK(tr.cond_prob(5) == doctest::Approx(1.0));
    CHECK(tr.nodes_at(1) == std::vector<int>{1, 2});
    CHECK(tr.ancestor_at(4, 1) == 1);
    CHECK(tr.ancestor_at(4, 0) == 0);
    CHECK(tr.inner_nodes() == std::vector<int>{0, 1, 2});
    CHECK(tr.leaves_under(1) == std::vector<int>{0, 1});
}

TEST_CASE("tree rejects malformed structures") {
    CHECK_THROWS_AS(FiltrationTree::from_children({{1, 2}, {2}, {}}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(FiltrationTree::from_children({{1}, {}, {}}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(FiltrationTree::from_children({{1, 2}, {3}, {}, {}}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(FiltrationTree::from_children({{1, 2}, {}, {}}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(FiltrationTree::from_children({{}}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(FiltrationTree::from_children({{1, 7}, {}, {}}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("regular trees number nodes level by level") {
    auto tr = FiltrationTree::regular_uniform({2, 3});
    CHECK(tr.num_nodes() == 1 + 2 + 6);
    CHECK(tr.children(1) == std::vector<int>{3, 4, 5});
    CHECK(tr.children(2) == std::vector<int>{6, 7, 8});
    CHECK(tr.prob(7) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("validate_scenario examples") {
    CHECK(validate_scenario(one_period_fin(0.5, 1.0, -1.0)).ok());

    auto bad = validate_scenario(one_period_fin(0.6, 1.0, -1.0));
    CHECK_FALSE(bad.ok());
    CHECK(mentions(bad, "M_fin not a martingale"));

    Scenario s = fixtures::scen_b(0.0);
    auto r = validate_scenario(s);
    CHECK(mentions(r, "lambda must be positive"));
}

TEST_CASE("validate_scenario reports dimensions and probabilities") {
    Scenario s = fixtures::scen_a();
    s.dividends.resize(2, 2);
    s.dividends.setOnes();
    CHECK(mentions(validate_scenario(s), "dividends"));

    s = fixtures::scen_a();
    s.agents[0].xi_n = Eigen::VectorXd::Zero(3);
    CHECK(mentions(validate_scenario(s), "xi_n"));

    s = fixtures::scen_a();
    s.agents[0].eta2 = Eigen::VectorXd::Zero(2);
    CHECK(mentions(validate_scenario(s), "eta2"));

    s = fixtures::scen_a();
    s.tree = FiltrationTree::from_children({{1, 2}, {}, {}}, {0.5, 0.6});
    CHECK(mentions(validate_scenario(s), "sum to"));

    s = fixtures::scen_a();
    s.tree = FiltrationTree::from_children({{1, 2}, {}, {}}, {1.0, 0.0});
    CHECK(mentions(validate_scenario(s), "must be positive"));

    s = fixtures::scen_d();
    s.m_fin(0, 0) = 0.3;
    s.m_fin(1, 0) = 1.3;
    s.m_fin(2, 0) = -0.7;
    CHECK(mentions(validate_scenario(s), "zero at the root"));

    s = fixtures::scen_a();
    s.d2 = 0;
    s.dividends.resize(2, 0);
    s.agents[0].eta2.resize(0);
    CHECK(mentions(validate_scenario(s), "at least one asset"));

    s = fixtures::scen_a();
    s.agents.clear();
    CHECK(mentions(validate_scenario(s), "at least one agent"));

    CHECK(validate_scenario(fixtures::scen_a()).ok());
    CHECK(validate_scenario(fixtures::scen_d()).ok());
}

TEST_CASE("total_endowment examples") {
    Scenario s = fixtures::scen_a();
    auto x = total_endowment(s, 0);
    CHECK(x[0] == 2.0);
    CHECK(x[1] == 1.0);

    s.agents[0].eta2[0] = 0.0;
    s.agents[0].xi_n << 3.0, 1.0;
    x = total_endowment(s, 0);
    CHECK(x[0] == 3.0);
    CHECK(x[1] == 1.0);

    s.agents[0].eta2[0] = 2.0;
    s.agents[0].xi_n << 1.0, 1.0;
    x = total_endowment(s, 0);
    CHECK(x[0] == 5.0);
    CHECK(x[1] == 3.0);

    CHECK_THROWS_AS(total_endowment(s, 1), std::out_of_range);
    CHECK_THROWS_AS(total_endowment(s, -1), std::out_of_range);
}

TEST_CASE("aggregate endowment identity and time-slice probabilities on random scenarios") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        RandomParams p;
        p.horizon = 1 + static_cast<int>(seed % 3);
        p.branching = 2 + static_cast<int>(seed % 3);
        p.d1 = static_cast<int>(seed % 2);
        p.d2 = 1 + static_cast<int>(seed % 2);
        p.agents = 1 + static_cast<int>(seed % 4);
        Scenario s = generate_random_scenario(seed, p);
        CHECK(validate_scenario(s).ok());

        LeafVector sum = LeafVector::Zero(s.tree.num_leaves());
        Eigen::VectorXd eta = Eigen::VectorXd::Zero(s.d2);
        LeafVector xin = LeafVector::Zero(s.tree.num_leaves());
        for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
            sum += total_endowment(s, k);
            eta += s.agents[k].eta2;
            xin += s.agents[k].xi_n;
        }
        LeafVector direct = s.dividends * eta + xin;
        CHECK((sum - direct).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(eta_bar(s).head(s.d1).isZero());

        for (int t = 0; t <= s.tree.horizon(); ++t) {
            double total = 0.0;
            for (int n : s.tree.nodes_at(t)) total += s.tree.prob(n);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("random generator is deterministic and bounded") {
    RandomParams p;
    p.horizon = 3;
    p.branching = 3;
    p.d1 = 2;
    p.d2 = 2;
    p.agents = 3;
    Json a = emit_scenario(generate_random_scenario(1, p));
    Json b = emit_scenario(generate_random_scenario(1, p));
    CHECK(a.dump() == b.dump());
    CHECK(a.dump() != emit_scenario(generate_random_scenario(2, p)).dump());

    RandomParams bad = p;
    bad.horizon = 7;
    CHECK_THROWS_AS(generate_random_scenario(1, bad), std::invalid_argument);
    bad = p;
    bad.branching = 5;
    CHECK_THROWS_AS(generate_random_scenario(1, bad), std::invalid_argument);
    bad = p;
    bad.d1 = 0;
    bad.d2 = 0;
    CHECK_THROWS_AS(generate_random_scenario(1, bad), std::invalid_argument);
    bad = p;
    bad.agents = 6;
    CHECK_THROWS_AS(generate_random_scenario(1, bad), std::invalid_argument);
}

TEST_CASE("random LinearMV stream exercises both existence branches") {
    int missing = 0, present = 0;
    RandomParams p;
    p.kind = PreferenceKind::LinearMV;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Scenario s = generate_random_scenario(derive_seed(7, seed), p);
        CHECK(validate_scenario(s).ok());
        (gamma_bar_fixed_point(s).exists ? present : missing)++;
    }
    CHECK(missing >= 1);
    CHECK(present >= 50);
}
