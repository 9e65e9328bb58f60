#include "mveq/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "mveq/equilibrium_linear_mv.hpp"
#include "mveq/equilibrium_quadratic.hpp"
#include "mveq/scenario_io.hpp"
#include "mveq/suites.hpp"

namespace mveq {

namespace {

struct Failure {
    int code;
    std::string message;
};

ScenarioFile load_valid(const RunConfig& cfg, const Tolerances& tol) {
    if (cfg.input.empty()) throw Failure{kParseError, "--input is required for " + cfg.command};
    ScenarioFile f;
    try {
        f = load_scenario_file(cfg.input);
    } catch (const ParseError& e) {
        throw Failure{kParseError, std::string("parse error: ") + e.what()};
    }
    ValidationReport v = validate_scenario(f.scenario, tol);
    if (!v.ok()) {
        std::string msg = "validation failed:";
        for (const auto& x : v.violations) msg += "\n  " + x;
        throw Failure{kValidationError, msg};
    }
    return f;
}

Json suite_json(const SuiteResult& r) {
    Json j;
    j["name"] = r.name;
    j["total"] = r.total;
    j["passed"] = r.passed;
    j["ok"] = r.ok();
    j["failures"] = r.failures;
    Json worst = Json::object();
    for (const auto& [k, v] : r.worst) worst[k] = v;
    j["worst"] = std::move(worst);
    Json counts = Json::object();
    for (const auto& [k, v] : r.counts) counts[k] = v;
    j["counts"] = std::move(counts);
    return j;
}

struct Output {
    Json json;
    std::string csv;
    int code = kOk;
};

Output cmd_solve_quadratic(const RunConfig& cfg, const Tolerances& tol) {
    ScenarioFile f = load_valid(cfg, tol);
    if (!all_quadratic(f.scenario)) throw Failure{kValidationError, "solve-quadratic needs quadratic preferences"};
    EquilibriumReport rep = solve_quadratic(f.scenario, tol);
    Output o;
    o.json["command"] = "solve-quadratic";
    o.json.update(report_to_json(f.scenario, rep));
    o.csv = report_to_csv(f.scenario, rep);
    if (rep.verdict == Verdict::NonexistenceProven) o.code = kNonexistence;
    return o;
}

Output cmd_solve_linear_mv(const RunConfig& cfg, const Tolerances& tol) {
    ScenarioFile f = load_valid(cfg, tol);
    MvEquilibriumReport rep;
    try {
        rep = solve_linear_mv(f.scenario, tol);
    } catch (const std::invalid_argument& e) {
        throw Failure{kValidationError, e.what()};
    }
    Output o;
    o.json["command"] = "solve-linear-mv";
    o.json.update(report_to_json(f.scenario, rep));
    o.csv = report_to_csv(f.scenario, rep);
    if (!rep.exists) o.code = kNonexistence;
    return o;
}

Output cmd_verify(const RunConfig& cfg, const Tolerances& tol) {
    ScenarioFile f = load_valid(cfg, tol);
    if (!f.prices) throw Failure{kValidationError, "verify needs a 'prices' block in the scenario file"};
    EquilibriumReport rep;
    try {
        rep = verify_equilibrium(f.scenario, *f.prices, tol);
    } catch (const std::invalid_argument& e) {
        throw Failure{kValidationError, e.what()};
    }
    Output o;
    o.json["command"] = "verify";
    o.json.update(report_to_json(f.scenario, rep));
    o.csv = report_to_csv(f.scenario, rep);
    return o;
}

Output cmd_frontier(const RunConfig& cfg, const Tolerances& tol) {
    ScenarioFile f = load_valid(cfg, tol);
    const Scenario& s = f.scenario;
    Output o;
    o.json["command"] = "frontier";

    AdaptedProcess prices;
    if (f.prices) {
        prices = *f.prices;
        o.json["price_source"] = "supplied";
    } else if (all_linear_mv(s)) {
        MvEquilibriumReport rep = solve_linear_mv(s, tol);
        if (!rep.exists) {
            o.json.update(report_to_json(s, rep));
            o.code = kNonexistence;
            return o;
        }
        prices = rep.prices;
        o.json["price_source"] = "linear mean-variance equilibrium";
    } else if (all_quadratic(s)) {
        EquilibriumReport rep = solve_quadratic(s, tol);
        if (rep.verdict == Verdict::NonexistenceProven) {
            o.json.update(report_to_json(s, rep));
            o.code = kNonexistence;
            return o;
        }
        prices = rep.prices;
        o.json["price_source"] = "quadratic equilibrium";
    } else {
        throw Failure{kValidationError, "mixed preference types"};
    }
    if (prices.rows() != s.tree.num_nodes() || prices.cols() != s.d())
        throw Failure{kValidationError, "price block has the wrong shape"};

    MvhSolver solver(s.tree, prices, tol);
    o.json["ell"] = solver.ell();
    o.json["unique_values"] = solver.unique_values();
    CsvWriter csv;
    csv.scalar("ell", solver.ell());
    if (!solver.unique_values()) {
        o.json["status"] = "frontier undefined: value-process uniqueness fails";
        csv.scalar("status", "undefined");
        o.csv = csv.str();
        return o;
    }
    Json agents = Json::array();
    for (int k = 0; k < static_cast<int>(s.agents.size()); ++k) {
        FrontierData fd = agent_frontier(s, solver, k);
        double y_opt = 0.0;
        if (const auto* mv = std::get_if<LinearMV>(&s.agents[k].preference))
            y_opt = mv->lambda / fd.ell;
        else
            y_opt = std::max(0.0, std::get<Quadratic>(s.agents[k].preference).gamma - fd.c);
        double y_max = 2.0 * std::max(1.0, y_opt);
        Json a;
        a["c"] = fd.c;
        a["eps2"] = fd.eps2;
        a["y_opt"] = y_opt;
        Json pts = Json::array();
        for (int i = 0; i <= 10; ++i) {
            double y = y_max * i / 10.0;
            Json pt;
            pt["y"] = y;
            pt["mean"] = fd.mean(y);
            pt["sigma"] = fd.sigma(y);
            pts.push_back(std::move(pt));
        }
        a["points"] = std::move(pts);
        agents.push_back(std::move(a));
        std::string tag = "_" + std::to_string(k);
        csv.scalar("c" + tag, fd.c);
        csv.scalar("eps2" + tag, fd.eps2);
        csv.scalar("y_opt" + tag, y_opt);
    }
    o.json["agents"] = std::move(agents);
    o.csv = csv.str();
    return o;
}

Output cmd_check_conditions(const RunConfig& cfg, const Tolerances& tol) {
    ScenarioFile f = load_valid(cfg, tol);
    const Scenario& s = f.scenario;
    AggregateState agg;
    if (all_quadratic(s)) {
        agg = aggregate(s);
    } else if (all_linear_mv(s)) {
        agg = aggregate_for_gamma(s, gamma_bar_fixed_point(s, tol).gamma_bar);
    } else {
        throw Failure{kValidationError, "mixed preference types"};
    }
    NecessaryConditions nc = check_necessary_conditions(s, agg, tol);
    Output o;
    o.json["command"] = "check-conditions";
    o.json["gamma_bar"] = agg.gamma_bar;
    o.json["z_bar"] = vector_to_json(agg.z_bar);
    o.json["z_vanishes"] = (agg.z_bar.array().abs() <= tol.abs).any();
    o.json["conditions"] = conditions_to_json(nc);

    CsvWriter csv;
    csv.scalar("gamma_bar", agg.gamma_bar);
    csv.scalar("pass", nc.pass() ? "true" : "false");
    csv.node_matrix("z_bar", s.tree, agg.z_bar);
    o.csv = csv.str();
    return o;
}

Output cmd_random_suite(const RunConfig& cfg, const Tolerances& tol) {
    SuiteOptions opt;
    opt.seed = cfg.seed;
    opt.jobs = cfg.jobs;
    opt.tol = tol;
    std::vector<SuiteResult> results;
    opt.count = cfg.count;
    results.push_back(run_quadratic_suite(opt));
    results.push_back(run_linear_mv_suite(opt));
    opt.count = std::max(2, cfg.count * 5 / 2);
    results.push_back(run_mvh_suite(opt));
    opt.count = std::max(1, cfg.count / 4);
    results.push_back(run_degenerate_suite(opt));

    Output o;
    o.json["command"] = "random-suite";
    o.json["seed"] = cfg.seed;
    bool all = true;
    Json arr = Json::array();
    CsvWriter csv;
    for (const auto& r : results) {
        all = all && r.ok();
        arr.push_back(suite_json(r));
        csv.scalar(r.name + "_total", static_cast<double>(r.total));
        csv.scalar(r.name + "_passed", static_cast<double>(r.passed));
    }
    o.json["all_passed"] = all;
    o.json["suites"] = std::move(arr);
    o.csv = csv.str();
    return o;
}

} // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (!(cfg.tol > 0.0) || !(cfg.rank_tol > 0.0)) {
        err << "tolerances must be positive\n";
        return kValidationError;
    }
    if (cfg.format != "json" && cfg.format != "csv") {
        err << "unknown format '" << cfg.format << "'\n";
        return kParseError;
    }
    Tolerances tol{cfg.tol, cfg.rank_tol};

    Output o;
    try {
        if (cfg.command == "solve-quadratic")
            o = cmd_solve_quadratic(cfg, tol);
        else if (cfg.command == "solve-linear-mv")
            o = cmd_solve_linear_mv(cfg, tol);
        else if (cfg.command == "verify")
            o = cmd_verify(cfg, tol);
        else if (cfg.command == "frontier")
            o = cmd_frontier(cfg, tol);
        else if (cfg.command == "check-conditions")
            o = cmd_check_conditions(cfg, tol);
        else if (cfg.command == "random-suite")
            o = cmd_random_suite(cfg, tol);
        else {
            err << "unknown command '" << cfg.command << "'\n";
            return kParseError;
        }
    } catch (const Failure& f) {
        err << f.message << "\n";
        return f.code;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kValidationError;
    }

    std::string text = cfg.format == "csv" ? o.csv : o.json.dump(2) + "\n";
    if (cfg.output.empty()) {
        out << text;
    } else {
        std::ofstream file(cfg.output, std::ios::binary);
        if (!file) {
            err << "cannot write " << cfg.output << "\n";
            return kParseError;
        }
        file << text;
    }
    return o.code;
}

} // namespace mveq
