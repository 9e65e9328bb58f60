#include "mveq/fixtures.hpp"

namespace mveq::fixtures {

namespace {

FiltrationTree coin() { return FiltrationTree::from_children({{1, 2}, {}, {}}, {0.5, 0.5}); }

Scenario productive_market() {
    Scenario s;
    s.tree = coin();
    s.d1 = 0;
    s.d2 = 1;
    s.s0_fin.resize(0);
    s.m_fin = Eigen::MatrixXd::Zero(3, 0);
    s.dividends.resize(2, 1);
    s.dividends << 2.0, 1.0;
    return s;
}

AgentSpec agent(double eta, Eigen::VectorXd xi_n, Preference p) {
    AgentSpec a;
    a.eta2 = Eigen::VectorXd::Constant(1, eta);
    a.xi_n = std::move(xi_n);
    a.preference = p;
    return a;
}

} // namespace

Scenario scen_a() {
    Scenario s = productive_market();
    s.agents.push_back(agent(1.0, Eigen::VectorXd::Zero(2), Quadratic{10.0}));
    return s;
}

Scenario scen_a_split() {
    Scenario s = productive_market();
    s.agents.push_back(agent(1.0, Eigen::VectorXd::Zero(2), Quadratic{4.0}));
    s.agents.push_back(agent(0.0, Eigen::VectorXd::Zero(2), Quadratic{6.0}));
    return s;
}

Scenario scen_b(double lambda) {
    Scenario s = productive_market();
    s.agents.push_back(agent(1.0, Eigen::VectorXd::Zero(2), LinearMV{lambda}));
    return s;
}

Scenario scen_b_two_agents() {
    Scenario s = productive_market();
    s.agents.push_back(agent(1.0, Eigen::VectorXd::Zero(2), LinearMV{0.5}));
    s.agents.push_back(agent(0.0, Eigen::VectorXd::Zero(2), LinearMV{0.5}));
    return s;
}

Scenario scen_d(double s0) {
    Scenario s;
    s.tree = coin();
    s.d1 = 1;
    s.d2 = 0;
    s.s0_fin = Eigen::VectorXd::Constant(1, s0);
    s.m_fin.resize(3, 1);
    s.m_fin << 0.0, 1.0, -1.0;
    s.dividends = Eigen::MatrixXd::Zero(2, 0);
    AgentSpec a;
    a.eta2.resize(0);
    a.xi_n.resize(2);
    a.xi_n << 3.0, 1.0;
    a.preference = Quadratic{4.0};
    s.agents.push_back(a);
    return s;
}

Scenario scen_c() {
    Scenario s = productive_market();
    s.dividends << 1.0, 1.0;
    Eigen::VectorXd xi(2);
    xi << 2.0, 0.0;
    s.agents.push_back(agent(1.0, xi, Quadratic{2.0}));
    return s;
}

Scenario scen_c_prime() {
    Scenario s = productive_market();
    Eigen::VectorXd xi(2);
    xi << 1.0, 0.0;
    s.agents.push_back(agent(1.0, xi, Quadratic{2.0}));
    return s;
}

AdaptedProcess scen_a_prices(double s0) {
    AdaptedProcess p(3, 1);
    p << s0, 2.0, 1.0;
    return p;
}

AdaptedProcess scen_c_prices(double s0) {
    AdaptedProcess p(3, 1);
    p << s0, 1.0, 1.0;
    return p;
}

FiltrationTree cancellation_tree() { return FiltrationTree::regular_uniform({2, 2}); }

AdaptedProcess cancellation_prices() {
    // regular({2,2}) numbers nodes 0 | 1 2 | 3 4 5 6
    AdaptedProcess p(7, 1);
    p << 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0;
    return p;
}

} // namespace mveq::fixtures
