// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "mveq/cli.hpp"
#include "mveq/equilibrium_linear_mv.hpp"
#include "mveq/equilibrium_quadratic.hpp"
#include "mveq/fixtures.hpp"
#include "mveq/oracles.hpp"
#include "mveq/scenario_io.hpp"
#include "mveq/suites.hpp"

using namespace mveq;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Line {
    bool pass = true;
    std::ostringstream detail;

    void need(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string scen(const std::string& name) { return std::string(MVEQ_SCENARIO_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string suite_summary(const SuiteResult& r) {
    std::ostringstream os;
    os << r.name << " " << r.passed << "/" << r.total;
    for (const auto& [k, v] : r.worst) os << " " << k << "=" << v;
    for (const auto& [k, v] : r.counts) os << " " << k << "=" << v;
    for (const auto& f : r.failures) os << " {" << f << "}";
    return os.str();
}

EquilibriumReport verify_a(double s0) { return verify_equilibrium(fixtures::scen_a(), fixtures::scen_a_prices(s0)); }

void ac1(Line& l) {
    auto t0 = Clock::now();
    EquilibriumReport rep = solve_quadratic(fixtures::scen_a());
    double ms = ms_since(t0);
    double s0 = rep.prices(0, 0);
    Eigen::Vector2d probs(0.5, 0.5), d(2.0, 1.0);
    double foc = oracle::one_period_price(probs, d, 10.0);
    l.need(std::abs(s0 - 25.0 / 17.0) <= 1e-12, "S0 = 25/17");
    l.need(std::abs(foc - 25.0 / 17.0) <= 1e-12, "one-period FOC oracle");
    l.need(rep.verdict == Verdict::Equilibrium, "solve verdict");
    l.need(verify_a(25.0 / 17.0).verdict == Verdict::Equilibrium, "verify at 25/17");
    l.need(verify_a(25.0 / 17.0 + 0.05).verdict == Verdict::NotEquilibrium, "verify at +0.05");
    l.need(verify_a(25.0 / 17.0 - 0.05).verdict == Verdict::NotEquilibrium, "verify at -0.05");
    l.need(ms < 10.0, "runtime < 10 ms");
    l.detail << " S0=" << format_double(s0) << " runtime_ms=" << ms;
}

void ac2(Line& l) {
    auto t0 = Clock::now();
    MvEquilibriumReport rep = solve_linear_mv(fixtures::scen_b());
    double ms = ms_since(t0);
    if (!rep.exists || rep.agents.empty()) {
        l.need(false, "equilibrium exists");
        return;
    }
    const AgentMvData& a = rep.agents[0];
    l.need(std::abs(rep.gamma.gamma_bar - 2.5) <= 1e-12, "gamma_bar = 2.5");
    l.need(std::abs(rep.prices(0, 0) - 1.25) <= 1e-12, "S0 = 1.25");
    l.need(std::abs(rep.ell - 0.8) <= 1e-12, "ell = 0.8");
    l.need(std::abs(a.frontier.c - 1.25) <= 1e-12, "c = 1.25");
    l.need(std::abs(a.frontier.eps2) <= 1e-12, "eps2 = 0");
    l.need(std::abs(a.y - 1.25) <= 1e-12, "y = 1.25");
    l.need(rep.residuals.fp_residual <= 1e-12, "fixed-point residual");
    l.need(rep.residuals.identity_residual <= 1e-12, "identity residual");
    l.need(ms < 10.0, "runtime < 10 ms");
    l.detail << " S0=" << format_double(rep.prices(0, 0)) << " ell=" << format_double(rep.ell)
             << " fp=" << rep.residuals.fp_residual << " identity=" << rep.residuals.identity_residual
             << " runtime_ms=" << ms;
}

void ac3(Line& l) {
    Scenario s = fixtures::scen_d();
    EquilibriumReport rep = solve_quadratic(s);
    // drift over (0, 1]: E[S_1] - S_0, the martingale part has mean zero
    const auto& tr = s.tree;
    double drift = 0.0;
    for (int c : tr.children(0)) drift += tr.prob(c) * rep.prices(c, 0);
    drift -= rep.prices(0, 0);
    l.need(rep.verdict == Verdict::Equilibrium, "verdict Equilibrium");
    l.need(std::abs(drift - 0.5) <= 1e-12, "drift = 0.5");
    l.need(rep.clearing_residual <= 1e-12, "clearing residual");
    l.need(eta_bar(s).cwiseAbs().maxCoeff() == 0.0, "zero net supply of the financial asset");
    l.detail << " drift=" << format_double(drift) << " clearing=" << rep.clearing_residual;
}

void ac4(Line& l) {
    EquilibriumReport cp = solve_quadratic(fixtures::scen_c_prime());
    l.need(cp.verdict == Verdict::NonexistenceProven, "C' NonexistenceProven");
    bool threw = false;
    try {
        construct_degenerate(fixtures::scen_c_prime());
    } catch (const NonexistenceProven&) {
        threw = true;
    }
    l.need(threw, "C' construct_degenerate throws");

    Scenario c = fixtures::scen_c();
    DegenerateConstruction dc = construct_degenerate(c);
    double s0 = dc.prices(0, 0);
    l.need(std::abs(s0 - 1.0) <= 1e-12, "C degenerate S0 = 1");
    EquilibriumReport v1 = verify_equilibrium(c, fixtures::scen_c_prices(1.0));
    EquilibriumReport vh = verify_equilibrium(c, fixtures::scen_c_prices(0.5));
    l.need(v1.verdict == Verdict::Equilibrium, "C verify S0 = 1");
    l.need(vh.verdict == Verdict::Equilibrium, "C verify S0 = 0.5");

    SuiteOptions opt;
    opt.count = 50;
    SuiteResult r = run_degenerate_suite(opt);
    l.need(r.ok(), "degenerate random suite");
    l.detail << " C'=" << verdict_name(cp.verdict) << " (" << cp.reason << ") C_S0=" << format_double(s0)
             << " | " << suite_summary(r);
}

void ac5(Line& l) {
    SuiteOptions opt;
    opt.count = 200;
    auto t0 = Clock::now();
    SuiteResult r = run_quadratic_suite(opt);
    double s = ms_since(t0) / 1000.0;
    l.need(r.ok() && r.total == 200, "all 200 scenarios pass");
    l.need(s < 60.0, "runtime < 60 s");
    l.detail << " " << suite_summary(r) << " runtime_s=" << s;
}

void ac6(Line& l) {
    SuiteOptions opt;
    opt.count = 200;
    auto t0 = Clock::now();
    SuiteResult r = run_linear_mv_suite(opt);
    double s = ms_since(t0) / 1000.0;
    l.need(r.ok() && r.total == 200, "all 200 scenarios pass");
    l.need(s < 120.0, "runtime < 120 s");
    l.detail << " " << suite_summary(r) << " runtime_s=" << s;
}

void ac7(Line& l) {
    SuiteOptions opt;
    opt.count = 500;
    SuiteResult r = run_mvh_suite(opt);
    l.need(r.ok(), "all pairs pass");
    l.need(r.total == 501, "500 pairs plus the cancellation example");
    l.need(r.count("cancellation_flagged") == 1, "cancellation example flagged");
    l.need(r.count("pairs_both_true") > 0 && r.count("pairs_both_false") > 0, "both directions exercised");
    l.need(r.metric("linearity_path_residual") <= 1e-9, "linearity");
    l.need(r.metric("c_formula_vs_exmvh") <= 1e-10, "c formula");
    l.detail << " " << suite_summary(r);
}

int shell(const std::string& cmd) {
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void ac8(Line& l) {
    const std::vector<std::string> jobs = {
        "solve-quadratic -i " + scen("scen_a.json"),
        "solve-quadratic -i " + scen("scen_a.json") + " --format csv",
        "solve-quadratic -i " + scen("scen_c_one.json"),
        "solve-quadratic -i " + scen("scen_c_prime.json"),
        "solve-quadratic -i " + scen("scen_d.json"),
        "solve-linear-mv -i " + scen("scen_b.json"),
        "solve-linear-mv -i " + scen("scen_b.json") + " --format csv",
        "verify -i " + scen("scen_c_half.json"),
        "frontier -i " + scen("scen_b.json"),
        "check-conditions -i " + scen("scen_c_prime.json"),
        "random-suite --count 20 --seed 3",
    };
    auto dir = std::filesystem::temp_directory_path();
    int compared = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        std::string a = (dir / ("mveq_ac8_" + std::to_string(i) + "_a")).string();
        std::string b = (dir / ("mveq_ac8_" + std::to_string(i) + "_b")).string();
        int ra = shell(std::string(MVEQ_BINARY) + " " + jobs[i] + " -o " + a + " 2>/dev/null");
        int rb = shell(std::string(MVEQ_BINARY) + " " + jobs[i] + " -o " + b + " 2>/dev/null");
        std::string ta = slurp(a), tb = slurp(b);
        l.need(ra == rb, "same exit status: " + jobs[i]);
        l.need(!ta.empty() && ta == tb, "byte-identical: " + jobs[i]);
        if (!ta.empty() && ta == tb) ++compared;
        std::filesystem::remove(a);
        std::filesystem::remove(b);
    }
    // in-process runs as well, same bytes as the binary
    RunConfig cfg;
    cfg.command = "random-suite";
    cfg.count = 20;
    cfg.seed = 3;
    std::ostringstream x, y, e;
    run(cfg, x, e);
    run(cfg, y, e);
    l.need(x.str() == y.str(), "in-process random-suite");
    l.detail << " identical_reports=" << compared << "/" << jobs.size();
}

} // namespace

int main() {
    std::vector<std::pair<std::string, std::function<void(Line&)>>> criteria = {
        {"AC1 one-period quadratic equilibrium", ac1},
        {"AC2 one-period linear mean-variance equilibrium", ac2},
        {"AC3 financial asset drift", ac3},
        {"AC4 vanishing aggregate density", ac4},
        {"AC5 random quadratic suite", ac5},
        {"AC6 random linear mean-variance suite", ac6},
        {"AC7 mean-variance hedging suite", ac7},
        {"AC8 determinism", ac8},
    };
    bool all = true;
    for (auto& [name, fn] : criteria) {
        Line l;
        try {
            fn(l);
        } catch (const std::exception& e) {
            l.need(false, std::string("exception: ") + e.what());
        }
        all = all && l.pass;
        std::cout << (l.pass ? "PASS " : "FAIL ") << name << ":" << l.detail.str() << std::endl;
    }
    return all ? 0 : 1;
}
