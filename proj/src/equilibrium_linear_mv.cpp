#include "mveq/equilibrium_linear_mv.hpp"

#include <cmath>
#include <stdexcept>

#include "mveq/stoch_calc.hpp"

namespace mveq {

GammaBar gamma_bar_fixed_point(const Scenario& s, const Tolerances& tol) {
    if (!all_linear_mv(s)) throw std::invalid_argument("linear mean-variance solver needs LinearMV preferences only");
    GammaBar g;
    LeafVector xi = LeafVector::Zero(s.tree.num_leaves());
    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
        xi += total_endowment(s, k);
        g.lambda_sum += std::get<LinearMV>(s.agents[k].preference).lambda;
    }
    if (xi.minCoeff() < -tol.abs) throw std::invalid_argument("aggregate endowment must be non-negative");
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(s.tree.leaf_probs().data(), s.tree.num_leaves());
    g.mean_xi_bar = w.dot(xi);
    g.gamma_bar = g.lambda_sum + g.mean_xi_bar;
    g.gamma_bar_0 = xi.maxCoeff();
    g.exists = g.gamma_bar > g.gamma_bar_0 + tol.abs;
    return g;
}

FrontierData agent_frontier(const Scenario& s, const MvhSolver& solver, int k) {
    if (!solver.unique_values()) throw std::domain_error("frontier needs unique value processes");
    MvhSolution ex = solver.solve_ex(total_endowment(s, k));
    return {solver.ell(), *ex.c, ex.sq_error};
}

FrontierData agent_frontier(const Scenario& s, const AdaptedProcess& prices, int k, const Tolerances& tol) {
    return agent_frontier(s, MvhSolver(s.tree, prices, tol), k);
}

PredictableProcess efficient_strategy(const Scenario& s, const MvhSolver& solver, int k, double y) {
    MvhSolution ex = solver.solve_ex(total_endowment(s, k));
    return y * solver.theta1() + buy_and_hold(s.tree, agent_eta(s, k)) - ex.theta;
}

MvStrategy optimal_mv_strategy(const Scenario& s, const MvhSolver& solver, int k) {
    if (!solver.unique_values()) throw std::domain_error("optimal strategy needs unique value processes");
    const auto* mv = std::get_if<LinearMV>(&s.agents.at(k).preference);
    if (!mv) throw std::invalid_argument("agent " + std::to_string(k) + " is not LinearMV");
    MvStrategy out;
    out.y = mv->lambda / solver.ell();
    out.theta = efficient_strategy(s, solver, k, out.y);
    return out;
}

MvStrategy optimal_mv_strategy(const Scenario& s, const AdaptedProcess& prices, int k, const Tolerances& tol) {
    return optimal_mv_strategy(s, MvhSolver(s.tree, prices, tol), k);
}

EfficiencyCheck mv_efficiency_check(const Scenario& s, const MvhSolver& solver, const PredictableProcess& theta,
                                    int k) {
    if (!solver.unique_values()) throw std::domain_error("efficiency check needs unique value processes");
    const auto& tr = s.tree;
    const double tol = solver.tol().abs;
    LeafVector xi = total_endowment(s, k);
    MvhSolution ex = solver.solve_ex(xi);
    PredictableProcess eta = buy_and_hold(tr, agent_eta(s, k));
    PredictableProcess centered = theta - eta + ex.theta;

    LeafVector g1 = solver.terminal_gains(solver.theta1());
    LeafVector gc = solver.terminal_gains(centered);
    double den = solver.expect(g1.cwiseAbs2());

    EfficiencyCheck r;
    r.y = den > tol ? solver.expect(gc.cwiseProduct(g1)) / den : 0.0;
    r.path_residual = solver.path_distance(centered, r.y * solver.theta1());

    LeafVector wealth = xi + solver.terminal_gains(theta - eta);
    r.mean = solver.expect(wealth);
    r.variance = solver.expect((wealth.array() - r.mean).matrix().cwiseAbs2());
    FrontierData f{solver.ell(), *ex.c, ex.sq_error};
    double sig = f.sigma(r.y);
    r.frontier_residual = std::max(std::abs(r.mean - f.mean(r.y)), std::abs(r.variance - sig * sig));

    double scale = 1.0 + std::abs(r.y);
    r.pass = r.y >= -tol && r.path_residual <= tol * scale && r.frontier_residual <= tol * scale * scale;
    return r;
}

EfficiencyCheck mv_efficiency_check(const Scenario& s, const AdaptedProcess& prices, const PredictableProcess& theta,
                                    int k, const Tolerances& tol) {
    return mv_efficiency_check(s, MvhSolver(s.tree, prices, tol), theta, k);
}

FixedPointResiduals verify_fixed_point(const Scenario& s, const MvhSolver& solver, double gamma_bar) {
    const auto& tr = s.tree;
    const double ell = solver.ell();
    double sum = 0.0, c_sum = 0.0;
    LeafVector xi_bar = LeafVector::Zero(tr.num_leaves());
    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
        LeafVector xi = total_endowment(s, k);
        xi_bar += xi;
        double c = *solver.solve_ex(xi).c;
        c_sum += c;
        sum += c + std::get<LinearMV>(s.agents[k].preference).lambda / ell;
    }
    FixedPointResiduals r;
    r.fp_residual = std::abs(gamma_bar - sum);
    r.identity_residual = std::abs((gamma_bar - solver.expect(xi_bar)) - (gamma_bar - c_sum) * ell);
    return r;
}

FixedPointResiduals verify_fixed_point(const Scenario& s, const AdaptedProcess& prices, double gamma_bar,
                                       const Tolerances& tol) {
    return verify_fixed_point(s, MvhSolver(s.tree, prices, tol), gamma_bar);
}

namespace {

bool density_orthogonal_to_prices(const Scenario& s, const AggregateState& agg0, double tol) {
    const auto& tr = s.tree;
    for (int j = 0; j < s.d1; ++j) {
        NodeVector br = bracket_increments(tr, s.m_fin.col(j), agg0.z_bar);
        if (br.cwiseAbs().maxCoeff() > tol) return false;
    }
    if (s.d2 > 0) {
        AdaptedProcess md = martingale_from_terminal(tr, s.dividends);
        for (int j = 0; j < s.d2; ++j) {
            NodeVector br = bracket_increments(tr, md.col(j), agg0.z_bar);
            if (br.cwiseAbs().maxCoeff() > tol) return false;
        }
    }
    return true;
}

} // namespace

MvEquilibriumReport solve_linear_mv(const Scenario& s, const Tolerances& tol) {
    MvEquilibriumReport rep;
    rep.gamma = gamma_bar_fixed_point(s, tol);
    rep.exists = rep.gamma.exists;
    if (!rep.exists) return rep;

    rep.trivial_regime = density_orthogonal_to_prices(s, aggregate_for_gamma(s, rep.gamma.gamma_bar_0), tol.abs);

    AggregateState agg = aggregate_for_gamma(s, rep.gamma.gamma_bar);
    rep.prices = construct_regular(s, agg, tol);
    MvhSolver solver(s.tree, rep.prices, tol);
    rep.ell = solver.ell();

    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
        AgentMvData a;
        a.lambda = std::get<LinearMV>(s.agents[k].preference).lambda;
        a.frontier = agent_frontier(s, solver, k);
        MvStrategy st = optimal_mv_strategy(s, solver, k);
        a.y = st.y;
        a.strategy = st.theta;
        rep.agents.push_back(std::move(a));
    }
    rep.residuals = verify_fixed_point(s, solver, rep.gamma.gamma_bar);

    OpportunityProcess op = opportunity_process(s.tree, rep.prices, std::nullopt, tol);
    rep.opportunity_l0 = op.L[0];
    rep.l0_residual = std::abs(op.L[0] - rep.ell);

    PredictableProcess sum = PredictableProcess::Zero(s.tree.num_nodes(), s.d());
    for (const auto& a : rep.agents) sum += a.strategy;
    rep.clearing_residual = solver.path_distance(sum, buy_and_hold(s.tree, agg.eta_bar));

    rep.verified = rep.residuals.fp_residual <= tol.abs && rep.residuals.identity_residual <= tol.abs &&
                   rep.clearing_residual <= tol.abs;
    return rep;
}

} // namespace mveq
