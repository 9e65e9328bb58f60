#include "mveq/scenario.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mveq {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

} // namespace

ValidationReport validate_scenario(const Scenario& s, const Tolerances& tol) {
    ValidationReport rep;
    auto& v = rep.violations;
    const auto& tr = s.tree;
    const int nodes = tr.num_nodes();
    const int leaves = tr.num_leaves();

    if (nodes == 0) {
        v.push_back("tree is empty");
        return rep;
    }

    double total = 0.0;
    for (int i = 0; i < leaves; ++i) {
        double p = tr.leaf_probs()[i];
        if (!(p > 0.0) || !std::isfinite(p))
            v.push_back("leaf probability " + std::to_string(i) + " must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > tol.abs)
        v.push_back("leaf probabilities sum to " + fmt(total) + ", expected 1");

    if (s.d1 < 0 || s.d2 < 0) v.push_back("d1 and d2 must be non-negative");
    if (s.d1 + s.d2 < 1) v.push_back("need at least one asset (d1 + d2 >= 1)");

    bool dims_ok = true;
    if (s.s0_fin.size() != s.d1) {
        v.push_back("s0_fin has length " + std::to_string(s.s0_fin.size()) + ", expected d1 = " +
                    std::to_string(s.d1));
        dims_ok = false;
    }
    if (s.m_fin.rows() != nodes || s.m_fin.cols() != s.d1) {
        v.push_back("m_fin must have one length-d1 vector per node");
        dims_ok = false;
    }
    if (s.dividends.rows() != leaves || s.dividends.cols() != s.d2) {
        v.push_back("dividends must have one length-d2 vector per leaf");
        dims_ok = false;
    }

    if (dims_ok && s.d1 > 0) {
        if (s.m_fin.row(0).cwiseAbs().maxCoeff() > tol.abs) v.push_back("m_fin must be zero at the root");
        double worst = 0.0;
        for (int n : tr.inner_nodes())
            for (int j = 0; j < s.d1; ++j) {
                double e = 0.0;
                for (int c : tr.children(n)) e += tr.cond_prob(c) * (s.m_fin(c, j) - s.m_fin(n, j));
                worst = std::max(worst, std::abs(e));
            }
        if (worst > tol.abs)
            v.push_back("M_fin not a martingale (max conditional drift " + fmt(worst) + ")");
    }
    if (s.m_fin.size() > 0 && !s.m_fin.allFinite()) v.push_back("m_fin has non-finite entries");
    if (s.dividends.size() > 0 && !s.dividends.allFinite())
        v.push_back("dividends have non-finite entries");

    if (s.agents.empty()) v.push_back("need at least one agent");
    for (std::size_t k = 0; k < s.agents.size(); ++k) {
        const auto& a = s.agents[k];
        std::string who = "agent " + std::to_string(k) + ": ";
        if (a.eta2.size() != s.d2) v.push_back(who + "eta2 must have length d2");
        if (a.xi_n.size() != leaves) v.push_back(who + "xi_n must have one value per leaf");
        if (const auto* mv = std::get_if<LinearMV>(&a.preference)) {
            if (!(mv->lambda > 0.0)) v.push_back(who + "lambda must be positive");
        } else if (!std::isfinite(std::get<Quadratic>(a.preference).gamma)) {
            v.push_back(who + "gamma must be finite");
        }
    }
    return rep;
}

LeafVector total_endowment(const Scenario& s, int k) {
    if (k < 0 || k >= static_cast<int>(s.agents.size()))
        throw std::out_of_range("agent index " + std::to_string(k) + " out of range");
    const auto& a = s.agents[k];
    LeafVector x = a.xi_n;
    if (s.d2 > 0) x += s.dividends * a.eta2;
    return x;
}

Eigen::VectorXd agent_eta(const Scenario& s, int k) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(s.d());
    eta.tail(s.d2) = s.agents.at(k).eta2;
    return eta;
}

Eigen::VectorXd eta_bar(const Scenario& s) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(s.d());
    for (std::size_t k = 0; k < s.agents.size(); ++k) eta.tail(s.d2) += s.agents[k].eta2;
    return eta;
}

PredictableProcess buy_and_hold(const FiltrationTree& tree, const Eigen::VectorXd& units) {
    PredictableProcess th = PredictableProcess::Zero(tree.num_nodes(), units.size());
    for (int n : tree.inner_nodes()) th.row(n) = units.transpose();
    return th;
}

bool all_quadratic(const Scenario& s) {
    for (const auto& a : s.agents)
        if (!std::holds_alternative<Quadratic>(a.preference)) return false;
    return !s.agents.empty();
}

bool all_linear_mv(const Scenario& s) {
    for (const auto& a : s.agents)
        if (!std::holds_alternative<LinearMV>(a.preference)) return false;
    return !s.agents.empty();
}

} // namespace mveq
