#include "mveq/scenario_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mveq {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ParseError(what); }

const Json& require(const Json& obj, const char* key) {
    if (!obj.is_object()) fail("expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "'");
    return *it;
}

double number(const Json& v, const std::string& where) {
    if (!v.is_number()) fail(where + ": expected a number");
    return v.get<double>();
}

int integer(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where + ": expected an integer");
    return v.get<int>();
}

Eigen::VectorXd number_vector(const Json& v, const std::string& where) {
    if (!v.is_array()) fail(where + ": expected an array");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

// Array of equal-length numeric arrays. Zero-width rows are allowed.
Eigen::MatrixXd number_matrix(const Json& v, const std::string& where) {
    if (!v.is_array()) fail(where + ": expected an array of arrays");
    std::size_t width = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_array()) fail(where + "[" + std::to_string(i) + "]: expected an array");
        if (i == 0) width = v[i].size();
        if (v[i].size() != width) fail(where + ": rows have different lengths");
    }
    Eigen::MatrixXd out(v.size(), width);
    for (std::size_t i = 0; i < v.size(); ++i)
        out.row(i) = number_vector(v[i], where + "[" + std::to_string(i) + "]").transpose();
    return out;
}

Preference parse_preference(const Json& v, const std::string& where) {
    const Json& type = require(v, "type");
    if (!type.is_string()) fail(where + ".type: expected a string");
    std::string t = type.get<std::string>();
    if (t == "quadratic") return Quadratic{number(require(v, "gamma"), where + ".gamma")};
    if (t == "linear_mv") return LinearMV{number(require(v, "lambda"), where + ".lambda")};
    fail(where + ".type: unknown preference '" + t + "'");
}

Json preference_json(const Preference& p) {
    Json j;
    if (const auto* q = std::get_if<Quadratic>(&p)) {
        j["type"] = "quadratic";
        j["gamma"] = q->gamma;
    } else {
        j["type"] = "linear_mv";
        j["lambda"] = std::get<LinearMV>(p).lambda;
    }
    return j;
}

} // namespace

ScenarioFile parse_scenario(const Json& doc) {
    if (!doc.is_object()) fail("scenario must be a JSON object");
    try {
        const Json& tree = require(doc, "tree");
        const Json& ch = require(tree, "children");
        if (!ch.is_array()) fail("tree.children: expected an array");
        std::vector<std::vector<int>> children;
        for (std::size_t i = 0; i < ch.size(); ++i) {
            if (!ch[i].is_array()) fail("tree.children[" + std::to_string(i) + "]: expected an array");
            std::vector<int> row;
            for (const auto& c : ch[i]) row.push_back(integer(c, "tree.children"));
            children.push_back(std::move(row));
        }
        Eigen::VectorXd lp = number_vector(require(tree, "leaf_probs"), "tree.leaf_probs");
        std::vector<double> probs(lp.data(), lp.data() + lp.size());

        ScenarioFile f;
        Scenario& s = f.scenario;
        try {
            s.tree = FiltrationTree::from_children(std::move(children), std::move(probs));
        } catch (const std::invalid_argument& e) {
            fail(std::string("tree: ") + e.what());
        }
        int horizon = integer(require(doc, "horizon"), "horizon");
        if (horizon != s.tree.horizon())
            fail("horizon " + std::to_string(horizon) + " does not match tree depth " +
                 std::to_string(s.tree.horizon()));

        s.d1 = integer(require(doc, "d1"), "d1");
        s.d2 = integer(require(doc, "d2"), "d2");
        s.s0_fin = doc.contains("s0_fin") ? number_vector(doc["s0_fin"], "s0_fin") : Eigen::VectorXd();
        if (doc.contains("m_fin"))
            s.m_fin = number_matrix(doc["m_fin"], "m_fin");
        else
            s.m_fin = Eigen::MatrixXd::Zero(s.tree.num_nodes(), 0);
        if (s.m_fin.rows() == 0 && s.d1 == 0) s.m_fin = Eigen::MatrixXd::Zero(s.tree.num_nodes(), 0);
        if (doc.contains("dividends"))
            s.dividends = number_matrix(doc["dividends"], "dividends");
        if (s.dividends.rows() == 0 && s.d2 == 0) s.dividends = Eigen::MatrixXd::Zero(s.tree.num_leaves(), 0);

        const Json& agents = require(doc, "agents");
        if (!agents.is_array()) fail("agents: expected an array");
        for (std::size_t k = 0; k < agents.size(); ++k) {
            std::string where = "agents[" + std::to_string(k) + "]";
            const Json& a = agents[k];
            if (!a.is_object()) fail(where + ": expected an object");
            AgentSpec spec;
            spec.eta2 = a.contains("eta2") ? number_vector(a["eta2"], where + ".eta2") : Eigen::VectorXd::Zero(s.d2);
            spec.xi_n = a.contains("xi_n") ? number_vector(a["xi_n"], where + ".xi_n")
                                           : Eigen::VectorXd::Zero(s.tree.num_leaves());
            spec.preference = parse_preference(require(a, "preference"), where + ".preference");
            s.agents.push_back(std::move(spec));
        }

        if (doc.contains("prices") && !doc["prices"].is_null()) {
            Eigen::MatrixXd p = number_matrix(doc["prices"], "prices");
            if (p.rows() != s.tree.num_nodes() || p.cols() != s.d1 + s.d2)
                fail("prices: expected one length-(d1+d2) vector per node");
            f.prices = p;
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed scenario: ") + e.what());
    }
}

ScenarioFile parse_scenario_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

ScenarioFile load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

Json vector_to_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_to_json(m.row(i).transpose()));
    return a;
}

Json strategy_to_json(const FiltrationTree& tree, const PredictableProcess& theta) {
    Json a = Json::array();
    for (int n : tree.inner_nodes()) {
        Json row;
        row["node"] = n;
        row["time"] = tree.time(n);
        row["position"] = vector_to_json(theta.row(n).transpose());
        a.push_back(std::move(row));
    }
    return a;
}

Json emit_scenario(const Scenario& s, const std::optional<AdaptedProcess>& prices) {
    Json doc;
    doc["horizon"] = s.tree.horizon();
    Json tree;
    tree["children"] = s.tree.children_lists();
    tree["leaf_probs"] = s.tree.leaf_probs();
    doc["tree"] = std::move(tree);
    doc["d1"] = s.d1;
    doc["d2"] = s.d2;
    doc["s0_fin"] = vector_to_json(s.s0_fin);
    doc["m_fin"] = matrix_to_json(s.m_fin);
    doc["dividends"] = matrix_to_json(s.dividends);
    Json agents = Json::array();
    for (const auto& a : s.agents) {
        Json j;
        j["eta2"] = vector_to_json(a.eta2);
        j["xi_n"] = vector_to_json(a.xi_n);
        j["preference"] = preference_json(a.preference);
        agents.push_back(std::move(j));
    }
    doc["agents"] = std::move(agents);
    if (prices) doc["prices"] = matrix_to_json(*prices);
    return doc;
}

Json conditions_to_json(const NecessaryConditions& nc) {
    auto entries = [](const std::vector<ConditionEntry>& v) {
        Json a = Json::array();
        for (const auto& e : v) {
            Json j;
            j["asset"] = e.asset;
            j["time"] = e.time;
            j["pass"] = e.pass;
            j["worst"] = e.worst;
            j["worst_node"] = e.worst_node;
            a.push_back(std::move(j));
        }
        return a;
    };
    Json j;
    j["pass"] = nc.pass();
    j["cond_xi"] = entries(nc.cond_xi);
    j["cond_g"] = entries(nc.cond_g);
    if (!nc.pass()) j["first_failure"] = nc.first_failure();
    return j;
}

Json report_to_json(const Scenario& s, const EquilibriumReport& r) {
    Json j;
    j["verdict"] = verdict_name(r.verdict);
    j["reason"] = r.reason;
    j["construction"] = r.construction;
    double gbar = 0.0;
    for (double g : r.gammas) gbar += g;
    j["gamma_bar"] = gbar;
    if (r.prices.size() > 0) {
        j["s0"] = vector_to_json(r.prices.row(0).transpose());
        j["prices"] = matrix_to_json(r.prices);
        j["ell"] = r.ell;
        j["unique_gains"] = r.unique_gains;
        j["unique_values"] = r.unique_values;
        j["terminal_residual"] = r.terminal_residual;
        j["financial_residual"] = r.financial_residual;
        j["clearing_residual"] = r.clearing_residual;
        j["clearing_terminal_residual"] = r.clearing_terminal_residual;
        j["martingale_residual"] = r.martingale_residual;
        j["representative_residual"] = r.representative_residual;
        j["admissibility"] = "automatic on a finite tree";
        Json agents = Json::array();
        for (std::size_t k = 0; k < r.agent_strategies.size(); ++k) {
            Json a;
            a["gamma"] = r.gammas[k];
            a["optimality_gap"] = r.optimality_gaps[k];
            a["decomposition_residual"] = r.decomposition_residuals[k];
            a["strategy"] = strategy_to_json(s.tree, r.agent_strategies[k]);
            agents.push_back(std::move(a));
        }
        j["agents"] = std::move(agents);
    }
    if (r.conditions) j["conditions"] = conditions_to_json(*r.conditions);
    if (!r.restart_residuals.empty()) j["restart_residuals"] = r.restart_residuals;
    return j;
}

Json report_to_json(const Scenario& s, const MvEquilibriumReport& r) {
    Json j;
    j["exists"] = r.exists;
    j["gamma_bar"] = r.gamma.gamma_bar;
    j["gamma_bar_0"] = r.gamma.gamma_bar_0;
    j["mean_xi_bar"] = r.gamma.mean_xi_bar;
    j["lambda_sum"] = r.gamma.lambda_sum;
    if (!r.exists) {
        j["status"] = "outside the solved class: gamma_bar <= gamma_bar_0";
        return j;
    }
    j["trivial_regime"] = r.trivial_regime;
    j["s0"] = vector_to_json(r.prices.row(0).transpose());
    j["prices"] = matrix_to_json(r.prices);
    j["ell"] = r.ell;
    j["opportunity_l0"] = r.opportunity_l0;
    j["l0_residual"] = r.l0_residual;
    j["fp_residual"] = r.residuals.fp_residual;
    j["identity_residual"] = r.residuals.identity_residual;
    j["clearing_residual"] = r.clearing_residual;
    j["verified"] = r.verified;
    Json agents = Json::array();
    for (const auto& a : r.agents) {
        Json x;
        x["lambda"] = a.lambda;
        x["c"] = a.frontier.c;
        x["eps2"] = a.frontier.eps2;
        x["y"] = a.y;
        x["strategy"] = strategy_to_json(s.tree, a.strategy);
        agents.push_back(std::move(x));
    }
    j["agents"] = std::move(agents);
    return j;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void CsvWriter::scalar(const std::string& quantity, double value) {
    body_ += quantity + ",,,," + format_double(value) + "\n";
}

void CsvWriter::scalar(const std::string& quantity, const std::string& value) {
    body_ += quantity + ",,,," + value + "\n";
}

void CsvWriter::node_matrix(const std::string& quantity, const FiltrationTree& tree, const Eigen::MatrixXd& m,
                            bool inner_only) {
    for (int n = 0; n < tree.num_nodes(); ++n) {
        if (inner_only && tree.is_leaf(n)) continue;
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            body_ += quantity + "," + std::to_string(tree.time(n)) + "," + std::to_string(n) + "," +
                     std::to_string(j) + "," + format_double(m(n, j)) + "\n";
    }
}

std::string CsvWriter::str() const { return "quantity,time,node,asset,value\n" + body_; }

std::string report_to_csv(const Scenario& s, const EquilibriumReport& r) {
    CsvWriter w;
    w.scalar("verdict", verdict_name(r.verdict));
    w.scalar("construction", r.construction);
    if (r.prices.size() > 0) {
        w.scalar("ell", r.ell);
        w.scalar("clearing_residual", r.clearing_residual);
        w.scalar("martingale_residual", r.martingale_residual);
        w.node_matrix("price", s.tree, r.prices);
        for (std::size_t k = 0; k < r.agent_strategies.size(); ++k)
            w.node_matrix("strategy_" + std::to_string(k), s.tree, r.agent_strategies[k], true);
    }
    return w.str();
}

std::string report_to_csv(const Scenario& s, const MvEquilibriumReport& r) {
    CsvWriter w;
    w.scalar("exists", r.exists ? "true" : "false");
    w.scalar("gamma_bar", r.gamma.gamma_bar);
    w.scalar("gamma_bar_0", r.gamma.gamma_bar_0);
    if (r.exists) {
        w.scalar("ell", r.ell);
        w.scalar("fp_residual", r.residuals.fp_residual);
        w.scalar("identity_residual", r.residuals.identity_residual);
        w.node_matrix("price", s.tree, r.prices);
        for (std::size_t k = 0; k < r.agents.size(); ++k) {
            w.scalar("c_" + std::to_string(k), r.agents[k].frontier.c);
            w.scalar("eps2_" + std::to_string(k), r.agents[k].frontier.eps2);
            w.scalar("y_" + std::to_string(k), r.agents[k].y);
            w.node_matrix("strategy_" + std::to_string(k), s.tree, r.agents[k].strategy, true);
        }
    }
    return w.str();
}

} // namespace mveq
