#include "mveq/equilibrium_quadratic.hpp"

#include <cmath>
#include <sstream>

#include "mveq/stoch_calc.hpp"

namespace mveq {

namespace {

bool z_vanishes_somewhere(const NodeVector& z, double tol) {
    return (z.array().abs() <= tol).any();
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Financial price paths from initial prices, martingale parts and drift.
void fill_financial(const Scenario& s, const Eigen::MatrixXd& drift, AdaptedProcess& prices) {
    const auto& tr = s.tree;
    for (int j = 0; j < s.d1; ++j) prices(0, j) = s.s0_fin[j];
    for (int n : tr.inner_nodes())
        for (int c : tr.children(n))
            for (int j = 0; j < s.d1; ++j)
                prices(c, j) = prices(n, j) + drift(n, j) + s.m_fin(c, j) - s.m_fin(n, j);
}

} // namespace

AggregateState aggregate_for_gamma(const Scenario& s, double gamma_bar) {
    AggregateState a;
    a.gamma_bar = gamma_bar;
    a.xi_bar = LeafVector::Zero(s.tree.num_leaves());
    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) a.xi_bar += total_endowment(s, k);
    a.h_bar = (gamma_bar - a.xi_bar.array()).matrix();
    a.z_bar = martingale_from_terminal(s.tree, a.h_bar);
    a.eta_bar = eta_bar(s);
    return a;
}

AggregateState aggregate(const Scenario& s) {
    if (!all_quadratic(s)) throw std::invalid_argument("aggregate needs quadratic preferences for every agent");
    double g = 0.0;
    for (const auto& a : s.agents) g += std::get<Quadratic>(a.preference).gamma;
    return aggregate_for_gamma(s, g);
}

Eigen::MatrixXd financial_drift(const Scenario& s, const AggregateState& agg, const PredictableProcess& xi,
                                const Tolerances& tol) {
    const auto& tr = s.tree;
    Eigen::MatrixXd drift = Eigen::MatrixXd::Zero(tr.num_nodes(), s.d1);
    for (int i = 0; i < s.d1; ++i)
        for (int j = 0; j < s.d1; ++j) {
            NodeVector br = bracket_increments(tr, s.m_fin.col(i), s.m_fin.col(j));
            for (int n : tr.inner_nodes()) {
                double z = agg.z_bar[n];
                if (std::abs(z) <= tol.abs) continue;
                drift(n, j) -= xi(n, i) / z * br[n];
            }
        }
    return drift;
}

AdaptedProcess construct_regular(const Scenario& s, const AggregateState& agg, const Tolerances& tol) {
    if (z_vanishes_somewhere(agg.z_bar, tol.abs))
        throw RequiresDegenerate("aggregate density vanishes at some node; use the degenerate construction");
    const auto& tr = s.tree;
    AdaptedProcess prices = AdaptedProcess::Zero(tr.num_nodes(), s.d());

    if (s.d1 > 0) {
        GkwDecomposition g = gkw_decompose(tr, agg.z_bar, s.m_fin, tol.rank);
        fill_financial(s, financial_drift(s, agg, g.xi, tol), prices);
    }
    if (s.d2 > 0) {
        Eigen::MatrixXd hd = agg.h_bar.asDiagonal() * s.dividends;
        AdaptedProcess num = martingale_from_terminal(tr, hd);
        prices.rightCols(s.d2) = (num.array().colwise() / agg.z_bar.array()).matrix();
        // exact terminal condition
        for (int l = 0; l < tr.num_leaves(); ++l) prices.block(tr.leaves()[l], s.d1, 1, s.d2) = s.dividends.row(l);
    }
    return prices;
}

AdaptedProcess construct_regular(const Scenario& s, const Tolerances& tol) {
    return construct_regular(s, aggregate(s), tol);
}

bool NecessaryConditions::pass() const {
    for (const auto& e : cond_xi)
        if (!e.pass) return false;
    for (const auto& e : cond_g)
        if (!e.pass) return false;
    return true;
}

std::string NecessaryConditions::first_failure() const {
    std::ostringstream os;
    os.precision(6);
    for (const auto& e : cond_g)
        if (!e.pass) {
            os << "cond_G fails: productive asset " << e.asset << " at t=" << e.time << ", node " << e.worst_node
               << ", |E[H D | F_t]| = " << e.worst << " where Z vanishes";
            return os.str();
        }
    for (const auto& e : cond_xi)
        if (!e.pass) {
            os << "cond_xi fails: financial asset " << e.asset << " at t=" << e.time << ", node " << e.worst_node
               << ", |xi d<M>| = " << e.worst << " where Z vanishes";
            return os.str();
        }
    return {};
}

NecessaryConditions check_necessary_conditions(const Scenario& s, const AggregateState& agg,
                                               const Tolerances& tol) {
    const auto& tr = s.tree;
    const int T = tr.horizon();
    NecessaryConditions nc;

    if (s.d1 > 0) {
        GkwDecomposition g = gkw_decompose(tr, agg.z_bar, s.m_fin, tol.rank);
        for (int i = 0; i < s.d1; ++i) {
            NodeVector br = bracket_increments(tr, s.m_fin.col(i), s.m_fin.col(i));
            for (int t = 1; t <= T; ++t) {
                ConditionEntry e{i, t, true, 0.0, -1};
                for (int n : tr.nodes_at(t - 1)) {
                    if (std::abs(agg.z_bar[n]) > tol.abs) continue;
                    double v = std::abs(g.xi(n, i) * br[n]);
                    if (e.worst_node < 0 || v > e.worst) {
                        e.worst = v;
                        e.worst_node = n;
                    }
                }
                e.pass = e.worst <= tol.abs;
                nc.cond_xi.push_back(e);
            }
        }
    }
    if (s.d2 > 0) {
        Eigen::MatrixXd hd = agg.h_bar.asDiagonal() * s.dividends;
        AdaptedProcess g = martingale_from_terminal(tr, hd);
        for (int j = 0; j < s.d2; ++j)
            for (int t = 0; t < T; ++t) {
                ConditionEntry e{j, t, true, 0.0, -1};
                for (int n : tr.nodes_at(t)) {
                    if (std::abs(agg.z_bar[n]) > tol.abs) continue;
                    double v = std::abs(g(n, j));
                    if (e.worst_node < 0 || v > e.worst) {
                        e.worst = v;
                        e.worst_node = n;
                    }
                }
                e.pass = e.worst <= tol.abs;
                nc.cond_g.push_back(e);
            }
    }
    return nc;
}

NecessaryConditions check_necessary_conditions(const Scenario& s, const Tolerances& tol) {
    return check_necessary_conditions(s, aggregate(s), tol);
}

DegenerateConstruction construct_degenerate(const Scenario& s, const AggregateState& agg,
                                            const Tolerances& tol) {
    NecessaryConditions nc = check_necessary_conditions(s, agg, tol);
    if (!nc.pass()) throw NonexistenceProven(nc.first_failure());

    const auto& tr = s.tree;
    const int T = tr.horizon();
    DegenerateConstruction out;
    out.prices = AdaptedProcess::Zero(tr.num_nodes(), s.d());

    if (s.d1 > 0) {
        GkwDecomposition g = gkw_decompose(tr, agg.z_bar, s.m_fin, tol.rank);
        fill_financial(s, financial_drift(s, agg, g.xi, tol), out.prices);
    }

    for (int t = 0; t <= T; ++t) {
        NodeVector e = restarted_exponential(tr, agg.z_bar, t, tol.abs);
        MartingaleCheck mc = is_martingale(tr, e, tol.abs, t);
        out.restart_residuals.push_back(mc.max_residual);
        out.restarts_are_martingales = out.restarts_are_martingales && mc.pass;
        if (s.d2 == 0) continue;

        LeafVector e_t(tr.num_leaves());
        for (int l = 0; l < tr.num_leaves(); ++l) e_t[l] = e[tr.leaves()[l]];
        const auto& nodes = tr.nodes_at(t);
        for (int j = 0; j < s.d2; ++j) {
            Eigen::VectorXd v = cond_expect(tr, e_t.cwiseProduct(s.dividends.col(j)), t);
            for (std::size_t i = 0; i < nodes.size(); ++i) out.prices(nodes[i], s.d1 + j) = v[i];
        }
    }
    return out;
}

DegenerateConstruction construct_degenerate(const Scenario& s, const Tolerances& tol) {
    return construct_degenerate(s, aggregate(s), tol);
}

IndividualOptimum individual_optimal(const Scenario& s, const MvhSolver& solver, int k, double gamma) {
    const auto& tr = s.tree;
    LeafVector xi = total_endowment(s, k);
    LeafVector h = (gamma - xi.array()).matrix();
    PredictableProcess eta = buy_and_hold(tr, agent_eta(s, k));

    IndividualOptimum r;
    r.theta = eta + solver.solve(h).theta;

    MvhSolution ex = solver.solve_ex(xi);
    r.c = *ex.c;
    r.decomposition = eta - ex.theta + (gamma - r.c) * solver.theta1();
    if (solver.unique_values()) {
        r.decomposition_checked = true;
        r.decomposition_residual = solver.path_distance(r.theta, r.decomposition);
    }
    return r;
}

IndividualOptimum individual_optimal(const Scenario& s, const AdaptedProcess& prices, int k,
                                     const Tolerances& tol) {
    const auto* q = std::get_if<Quadratic>(&s.agents.at(k).preference);
    if (!q) throw std::invalid_argument("agent " + std::to_string(k) + " is not quadratic");
    return individual_optimal(s, MvhSolver(s.tree, prices, tol), k, q->gamma);
}

RepresentativeCheck representative_check(const Scenario& s, const MvhSolver& solver,
                                         const std::vector<double>& gammas) {
    const auto& tr = s.tree;
    double gbar = 0.0;
    PredictableProcess sum = PredictableProcess::Zero(tr.num_nodes(), s.d());
    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
        gbar += gammas.at(k);
        sum += individual_optimal(s, solver, k, gammas[k]).theta;
    }
    AggregateState agg = aggregate_for_gamma(s, gbar);
    PredictableProcess rep = buy_and_hold(tr, agg.eta_bar) + solver.solve(agg.h_bar).theta;
    RepresentativeCheck rc;
    rc.residual = solver.path_distance(sum, rep);
    rc.pass = rc.residual <= solver.tol().abs;
    return rc;
}

RepresentativeCheck representative_check(const Scenario& s, const AdaptedProcess& prices, const Tolerances& tol) {
    AggregateState agg = aggregate(s);
    std::vector<double> gammas;
    for (const auto& a : s.agents) gammas.push_back(std::get<Quadratic>(a.preference).gamma);
    return representative_check(s, MvhSolver(s.tree, prices, tol), gammas);
}

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Equilibrium: return "Equilibrium";
    case Verdict::NotEquilibrium: return "NotEquilibrium";
    case Verdict::NonexistenceProven: return "NonexistenceProven";
    }
    return "?";
}

EquilibriumReport verify_equilibrium(const Scenario& s, const AdaptedProcess& prices,
                                     const std::vector<double>& gammas, const Tolerances& tol) {
    const auto& tr = s.tree;
    if (prices.rows() != tr.num_nodes() || prices.cols() != s.d())
        throw std::invalid_argument("price block must have one length-(d1+d2) vector per node");
    if (gammas.size() != s.agents.size()) throw std::invalid_argument("need one target per agent");

    EquilibriumReport rep;
    rep.construction = "supplied";
    rep.prices = prices;
    rep.gammas = gammas;

    for (int l = 0; l < tr.num_leaves(); ++l)
        for (int j = 0; j < s.d2; ++j)
            rep.terminal_residual =
                std::max(rep.terminal_residual, std::abs(prices(tr.leaves()[l], s.d1 + j) - s.dividends(l, j)));

    for (int j = 0; j < s.d1; ++j) {
        rep.financial_residual = std::max(rep.financial_residual, std::abs(prices(0, j) - s.s0_fin[j]));
        for (int n : tr.inner_nodes()) {
            double lo = 0.0, hi = 0.0;
            bool first = true;
            for (int c : tr.children(n)) {
                double a = (prices(c, j) - prices(n, j)) - (s.m_fin(c, j) - s.m_fin(n, j));
                lo = first ? a : std::min(lo, a);
                hi = first ? a : std::max(hi, a);
                first = false;
            }
            rep.financial_residual = std::max(rep.financial_residual, hi - lo);
        }
    }

    MvhSolver solver(tr, prices, tol);
    rep.unique_gains = solver.unique_gains();
    rep.unique_values = solver.unique_values();
    rep.ell = solver.ell();

    const Eigen::MatrixXd& g = solver.op().terminal();
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(tr.leaf_probs().data(), tr.num_leaves());

    double gbar = 0.0;
    PredictableProcess sum = PredictableProcess::Zero(tr.num_nodes(), s.d());
    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
        gbar += gammas[k];
        IndividualOptimum opt = individual_optimal(s, solver, k, gammas[k]);
        rep.agent_strategies.push_back(opt.theta);
        rep.decomposition_residuals.push_back(opt.decomposition_residual);
        sum += opt.theta;

        // first-order condition of E[(H^k - vartheta . S_T)^2] in every coordinate
        PredictableProcess spec = opt.theta - buy_and_hold(tr, agent_eta(s, k));
        LeafVector h = (gammas[k] - total_endowment(s, k).array()).matrix();
        LeafVector resid = h - g * solver.op().to_coords(spec);
        Eigen::VectorXd foc = g.transpose() * w.cwiseProduct(resid);
        rep.optimality_gaps.push_back(max_abs(foc));
    }

    AggregateState agg = aggregate_for_gamma(s, gbar);
    PredictableProcess excess = sum - buy_and_hold(tr, agg.eta_bar);
    rep.clearing_residual = max_abs(solver.gains_path(excess));
    rep.clearing_terminal_residual = max_abs(solver.terminal_gains(excess));

    AdaptedProcess zs = agg.z_bar.asDiagonal() * prices;
    rep.martingale_residual = is_martingale(tr, zs, tol.abs).max_residual;

    PredictableProcess representative = buy_and_hold(tr, agg.eta_bar) + solver.solve(agg.h_bar).theta;
    rep.representative_residual = solver.path_distance(sum, representative);

    double worst_gap = 0.0;
    for (double x : rep.optimality_gaps) worst_gap = std::max(worst_gap, x);
    // Without unique gains any terminal-neutral adjustment keeps every agent
    // optimal, so clearing only has to hold for terminal gains.
    double clearing = rep.unique_gains ? rep.clearing_residual : rep.clearing_terminal_residual;

    rep.verdict = Verdict::NotEquilibrium;
    if (rep.terminal_residual > tol.abs)
        rep.reason = "terminal condition S_T = D violated";
    else if (rep.financial_residual > tol.abs)
        rep.reason = "financial prices inconsistent with s0_fin and m_fin";
    else if (worst_gap > tol.abs)
        rep.reason = "agent optimality gap above tolerance";
    else if (clearing > tol.abs)
        rep.reason = "clearing fails";
    else
        rep.verdict = Verdict::Equilibrium;
    return rep;
}

EquilibriumReport verify_equilibrium(const Scenario& s, const AdaptedProcess& prices, const Tolerances& tol) {
    std::vector<double> gammas;
    if (all_quadratic(s)) {
        for (const auto& a : s.agents) gammas.push_back(std::get<Quadratic>(a.preference).gamma);
        return verify_equilibrium(s, prices, gammas, tol);
    }
    if (!all_linear_mv(s)) throw std::invalid_argument("mixed preference types");
    if (prices.rows() != s.tree.num_nodes() || prices.cols() != s.d())
        throw std::invalid_argument("price block must have one length-(d1+d2) vector per node");

    MvhSolver solver(s.tree, prices, tol);
    if (!solver.unique_values()) {
        EquilibriumReport rep;
        rep.construction = "supplied";
        rep.prices = prices;
        rep.unique_gains = solver.unique_gains();
        rep.ell = solver.ell();
        rep.reason = "value-process uniqueness fails; mean-variance targets undefined";
        return rep;
    }
    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
        double c = *solver.solve_ex(total_endowment(s, k)).c;
        gammas.push_back(c + std::get<LinearMV>(s.agents[k].preference).lambda / solver.ell());
    }
    return verify_equilibrium(s, prices, gammas, tol);
}

EquilibriumReport solve_quadratic(const Scenario& s, const Tolerances& tol) {
    AggregateState agg = aggregate(s);
    std::vector<double> gammas;
    for (const auto& a : s.agents) gammas.push_back(std::get<Quadratic>(a.preference).gamma);

    if (!z_vanishes_somewhere(agg.z_bar, tol.abs)) {
        EquilibriumReport rep = verify_equilibrium(s, construct_regular(s, agg, tol), gammas, tol);
        rep.construction = "regular";
        return rep;
    }

    NecessaryConditions nc = check_necessary_conditions(s, agg, tol);
    if (!nc.pass()) {
        EquilibriumReport rep;
        rep.verdict = Verdict::NonexistenceProven;
        rep.reason = nc.first_failure();
        rep.construction = "none";
        rep.gammas = gammas;
        rep.conditions = nc;
        return rep;
    }
    DegenerateConstruction dc = construct_degenerate(s, agg, tol);
    EquilibriumReport rep = verify_equilibrium(s, dc.prices, gammas, tol);
    rep.construction = "degenerate";
    rep.conditions = nc;
    rep.restart_residuals = dc.restart_residuals;
    return rep;
}

} // namespace mveq
