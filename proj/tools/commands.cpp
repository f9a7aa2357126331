#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "dmw/benchmarks.hpp"
#include "dmw/catalog.hpp"
#include "dmw/contract.hpp"
#include "dmw/error.hpp"
#include "dmw/market.hpp"
#include "dmw/mechanism.hpp"
#include "dmw/parallel.hpp"
#include "dmw/report.hpp"

namespace dmw::cli {

namespace {

using nlohmann::json;

void diagnostic(const std::string& level, const std::string& code, const std::string& message) {
    std::cerr << json{{"level", level}, {"code", code}, {"message", message}}.dump() << "\n";
}

json read_json_file(const std::string& path) {
    if (path.empty()) fail(ErrorCode::BadParams, "--instance is required for this command");
    std::ifstream in(path);
    if (!in) fail(ErrorCode::BadParams, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::BadParams, "'" + path + "' is not valid JSON: " + e.what());
    }
}

MarketInstance load_instance(const RunConfig& cfg) { return market_from_json(read_json_file(cfg.instance_path)); }

struct Symmetric {
    Distribution f;
    double r;
    int n;
};

Symmetric symmetric_view(const MarketInstance& inst) {
    if (!inst.ex_ante_identical()) {
        fail(ErrorCode::AssumptionViolated, "this command needs ex-ante identical agents");
    }
    return {inst.contribution(0), inst.reward(0), static_cast<int>(inst.n())};
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) fail(ErrorCode::BadParams, "cannot parse number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

// "lo:hi:step" -> lo, lo + step, ... up to hi.
std::vector<double> parse_range(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_list(item).at(0));
    if (parts.size() == 2) parts.push_back(1.0);
    if (parts.size() != 3) fail(ErrorCode::BadRange, "range must look like lo:hi:step");
    const double lo = parts[0], hi = parts[1], step = parts[2];
    if (!(hi >= lo) || !(step > 0.0)) fail(ErrorCode::BadRange, "range needs hi >= lo and a positive step");
    std::vector<double> out;
    const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    for (long long k = 0; k <= count; ++k) out.push_back(std::min(lo + static_cast<double>(k) * step, hi));
    return out;
}

int as_int(double v, const char* what) {
    if (v != std::round(v) || v < 1 || v > 1e7) fail(ErrorCode::BadRange, std::string(what) + " values must be positive integers");
    return static_cast<int>(v);
}

struct Output {
    Manifest manifest;
    json result;
    std::optional<CsvTable> table;
};

void emit(const RunConfig& cfg, Output& out) {
    out.manifest.command = cfg.command;
    out.manifest.seed = cfg.seed;
    if (cfg.format == Format::csv) {
        if (!out.table) fail(ErrorCode::BadParams, "command '" + cfg.command + "' has no CSV form");
        write_text(out.table->render(out.manifest), cfg.out);
        return;
    }
    json doc{{"manifest", out.manifest.to_json()}, {"result", out.result}};
    write_text(doc.dump(2) + "\n", cfg.out);
}

CsvTable ratio_table(const std::string& key, const std::string& key_unit, const std::string& key_desc) {
    return CsvTable({{key, key_unit, key_desc},
                     {"u_fb", "money", "first-best benchmark"},
                     {"u_sb", "money", "second-best benchmark"},
                     {"u_star", "money", "principal utility at the optimal contract"},
                     {"u_posted", "money", "principal utility when the intermediary posts one price"},
                     {"podm", "ratio", "u_sb / u_star"},
                     {"poa", "ratio", "u_fb / u_star"},
                     {"podm_posted", "ratio", "u_sb / u_posted"},
                     {"poa_posted", "ratio", "u_fb / u_posted"},
                     {"alpha_star", "share", "optimal linear contract"},
                     {"z_star", "money", "optimal threshold contribution"}});
}

std::vector<CsvTable::Cell> ratio_cells(CsvTable::Cell key, const RatioReport& r) {
    return {key, r.u_fb, r.u_sb, r.u_star, r.u_posted, r.podm, r.poa, r.podm_posted, r.poa_posted, r.alpha_star, r.z_star};
}

json dist_summary(const Distribution& f, const std::vector<double>& zs) {
    const auto mp = monopoly_point(f);
    const auto cls = classify(f);
    json j{{"distribution", f.to_json()},
           {"monopoly", {{"theta", mp.theta}, {"r_star", mp.r_star}, {"capped", mp.capped}}},
           {"classification", {{"regular", cls.regular}, {"mhr", cls.mhr}, {"check_grid_size", cls.check_grid_size},
                               {"tolerance", cls.tolerance}, {"warnings", cls.warnings}}},
           {"atom_convention", f.right_atom() > 0.0}};
    json points = json::array();
    for (double z : zs) {
        json p{{"z", z}, {"cdf", f.cdf(z)}, {"pdf", f.pdf(z)}};
        try {
            p["phi"] = virtual_value(f, z);
        } catch (const Error& e) {
            p["phi"] = nullptr;
            p["phi_error"] = to_string(e.code());
        }
        try {
            const auto h = hazard_profile(f, z);
            p["h"] = h.h;
            p["H"] = h.H;
        } catch (const Error& e) {
            p["h"] = nullptr;
            p["H"] = nullptr;
        }
        points.push_back(p);
    }
    if (!zs.empty()) j["points"] = points;
    return j;
}

int cmd_dist_analyze(const RunConfig& cfg) {
    const json doc = read_json_file(cfg.instance_path);
    std::vector<Distribution> dists;
    if (doc.contains("kind")) {
        dists.push_back(distribution_from_json(doc));
    } else {
        const auto inst = market_from_json(doc);
        for (std::size_t i = 0; i < inst.n(); ++i) dists.push_back(inst.contribution(i));
    }
    const auto zs = cfg.z_points.empty() ? std::vector<double>{} : parse_list(cfg.z_points);
    Output out;
    out.result = json::array();
    CsvTable table({{"index", "-", "distribution index"},
                    {"theta", "money", "monopoly reserve (largest maximizer)"},
                    {"r_star", "money", "monopoly revenue"},
                    {"regular", "bool", "virtual value non-decreasing on the check grid"},
                    {"mhr", "bool", "hazard rate non-decreasing on the check grid"}});
    for (std::size_t i = 0; i < dists.size(); ++i) {
        auto s = dist_summary(dists[i], zs);
        table.add_row({static_cast<long long>(i), s["monopoly"]["theta"].get<double>(),
                       s["monopoly"]["r_star"].get<double>(),
                       static_cast<long long>(s["classification"]["regular"].get<bool>()),
                       static_cast<long long>(s["classification"]["mhr"].get<bool>())});
        out.result.push_back(std::move(s));
    }
    out.table = std::move(table);
    emit(cfg, out);
    return 0;
}

int cmd_contract_optimize(const RunConfig& cfg) {
    const auto inst = load_instance(cfg);
    std::string mode = cfg.mode;
    if (mode == "auto") {
        mode = inst.ex_ante_identical() ? "iid" : inst.identical_rewards() ? "identical" : "general";
    }
    ContractSolution sol;
    if (mode == "iid" || mode == "posted") {
        const auto sym = symmetric_view(inst);
        sol = mode == "iid" ? optimize_contract_iid(sym.f, sym.r, sym.n) : optimize_contract_posted(sym.f, sym.r, sym.n);
        sol.contract = Contract::linear(sol.alpha, inst.m());
    } else if (mode == "identical") {
        IdenticalRewardOptions opts;
        opts.mc_samples = cfg.samples;
        opts.seed = cfg.seed;
        sol = optimize_contract_identical_reward(inst, opts);
    } else if (mode == "general") {
        GeneralSearch search;
        search.mc_samples = cfg.samples;
        search.seed = cfg.seed;
        sol = optimize_contract_general(inst, search);
    } else {
        fail(ErrorCode::BadParams, "unknown mode '" + cfg.mode + "'");
    }
    Output out;
    out.manifest.estimator = to_string(sol.estimator);
    out.manifest.samples = sol.samples;
    if (sol.estimator == Estimator::monte_carlo) out.manifest.std_error = sol.std_error;
    out.result = sol.to_json();
    out.result["mode"] = mode;
    if (mode == "general") out.result["heuristic"] = true;
    CsvTable table({{"alpha", "share", "linear share (nan for non-linear contracts)"},
                    {"threshold_z", "money", "threshold contribution"},
                    {"utility", "money", "principal utility"},
                    {"stderr", "money", "standard error (0 for closed form)"}});
    table.add_row({sol.alpha, sol.threshold_z, sol.utility, sol.std_error});
    out.table = std::move(table);
    emit(cfg, out);
    if (!sol.converged) {
        diagnostic("error", to_string(ErrorCode::NonConvergence), "contract search did not converge");
        return 3;
    }
    return 0;
}

int cmd_contract_robust(const RunConfig& cfg) {
    const auto sym = symmetric_view(load_instance(cfg));
    const auto d = robust_contract(sym.f, sym.r, cfg.s, cfg.ell, robust_regime_from_string(cfg.regime));
    Output out;
    out.result = d.to_json();
    CsvTable table({{"n", "agents", "market size"},
                    {"utility", "money", "principal utility under the robust contract"},
                    {"u_sb", "money", "second-best benchmark"},
                    {"u_fb", "money", "first-best benchmark"},
                    {"podm", "ratio", "u_sb / utility"},
                    {"poa", "ratio", "u_fb / utility"}});
    for (const auto& row : d.rows) table.add_row({static_cast<long long>(row.n), row.utility, row.u_sb, row.u_fb, row.podm, row.poa});
    out.table = std::move(table);
    emit(cfg, out);
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const auto inst = load_instance(cfg);
    const auto kind = mechanism_from_string(cfg.mechanism);
    Contract t;
    std::string source;
    if (!cfg.contract.empty()) {
        t = Contract{parse_list(cfg.contract)};
        source = "given";
    } else if (cfg.alpha >= 0.0) {
        t = Contract::linear(cfg.alpha, inst.m());
        source = "given";
    } else if (inst.ex_ante_identical()) {
        const auto sym = symmetric_view(inst);
        t = Contract::linear(optimize_contract_iid(sym.f, sym.r, sym.n).alpha, inst.m());
        source = "optimal_linear";
    } else {
        fail(ErrorCode::BadParams, "pass --alpha or --contract for agents that are not ex-ante identical");
    }
    const auto est = simulate_market(inst, t, kind, cfg.samples, cfg.seed);
    Output out;
    out.manifest.estimator = to_string(Estimator::monte_carlo);
    out.manifest.samples = cfg.samples;
    out.manifest.std_error = est.principal.std_error;
    out.result = est.to_json();
    out.result["mechanism"] = to_string(kind);
    out.result["contract"] = t.to_json();
    out.result["contract_source"] = source;
    CsvTable table({{"quantity", "-", "utility being estimated"},
                    {"mean", "money", "sample mean"},
                    {"stderr", "money", "standard error of the mean"}});
    table.add_row({std::string("principal"), est.principal.mean, est.principal.std_error});
    table.add_row({std::string("intermediary"), est.intermediary.mean, est.intermediary.std_error});
    table.add_row({std::string("agents_total"), est.agents_total.mean, est.agents_total.std_error});
    table.add_row({std::string("welfare"), est.welfare.mean, est.welfare.std_error});
    out.table = std::move(table);
    emit(cfg, out);
    return 0;
}

int cmd_ratios(const RunConfig& cfg) {
    const auto sym = symmetric_view(load_instance(cfg));
    const auto rep = ratios(sym.f, sym.r, sym.n);
    Output out;
    out.manifest.estimator = "quadrature";
    out.result = rep.to_json();
    auto table = ratio_table("n", "agents", "market size");
    table.add_row(ratio_cells(static_cast<long long>(sym.n), rep));
    out.table = std::move(table);
    emit(cfg, out);
    return 0;
}

Output table4_output(const std::string& taus_path, int n_max) {
    const auto taus = load_taus(taus_path.empty() ? default_taus_path() : taus_path);
    const auto rows = podm_upper_table(taus.taus, n_max);
    Output out;
    out.result = json{{"tau_version", taus.version}, {"tau_source", taus.source}, {"rows", json::array()}};
    CsvTable table({{"n", "agents", "market size"},
                    {"tau", "ratio", "configured optimal-auction to anonymous-pricing ratio"},
                    {"z", "probability", "(1 - 1/e)^(1/n)"},
                    {"bound", "ratio", "upper bound on PoDM for MHR distributions"}});
    for (const auto& r : rows) {
        out.result["rows"].push_back({{"n", r.n}, {"tau", r.tau}, {"z", r.z}, {"bound", r.bound}});
        table.add_row({static_cast<long long>(r.n), r.tau, r.z, r.bound});
    }
    out.table = std::move(table);
    return out;
}

int cmd_table4(const RunConfig& cfg) {
    auto out = table4_output(cfg.taus_path, cfg.n_max);
    emit(cfg, out);
    return 0;
}

Output reproduce_example1(const RunConfig& cfg) {
    const Distribution f = make_uniform(1.0, 2.0);
    const auto rep = ratios(f, 2.0, 2);
    const Distribution cost = make_uniform(0.0, 1.0);
    const MarketInstance inst({4.0, 0.0}, {AgentSpec{{0.5, 0.5}, cost, std::nullopt}, AgentSpec{{0.5, 0.5}, cost, std::nullopt}});
    const auto mc = simulate_market(inst, Contract::linear(rep.alpha_star, 2), MechanismKind::vwm, cfg.samples, cfg.seed);
    Output out;
    out.manifest.estimator = "closed_form";
    out.manifest.samples = cfg.samples;
    out.manifest.std_error = mc.principal.std_error;
    out.result = rep.to_json();
    out.result["simulated_u_star"] = {{"mean", mc.principal.mean}, {"stderr", mc.principal.std_error}};
    auto table = ratio_table("n", "agents", "market size");
    table.add_row(ratio_cells(2LL, rep));
    out.table = std::move(table);
    return out;
}

Output reproduce_staircase(const std::vector<int>& ks) {
    Output out;
    out.manifest.estimator = "quadrature";
    out.result = json::array();
    auto table = ratio_table("K", "pieces", "staircase size; kappa = 2^K / ln 2");
    std::vector<RatioReport> reps(ks.size());
    parallel_for(ks.size(), [&](std::size_t k) {
        reps[k] = ratios(make_staircase(ks[k]), staircase_breakpoint(ks[k], 0), 1);
    });
    for (std::size_t k = 0; k < ks.size(); ++k) {
        const int K = ks[k];
        auto j = reps[k].to_json();
        j["K"] = K;
        j["kappa"] = staircase_breakpoint(K, 0);
        j["podm_formula"] = K / (2.0 - std::ldexp(1.0, 1 - K));
        out.result.push_back(j);
        table.add_row(ratio_cells(static_cast<long long>(K), reps[k]));
    }
    out.table = std::move(table);
    return out;
}

Output reproduce_condexp() {
    const double r = 10.0;
    const int n = 2;
    const double K = std::pow(n, r + 1.0) / -std::expm1(-r);
    const auto rep = ratios(make_cond_exponential(r, K), r, n);
    Output out;
    out.manifest.estimator = "quadrature";
    out.result = rep.to_json();
    out.result["r"] = r;
    out.result["K"] = K;
    out.result["n"] = n;
    out.result["e"] = std::exp(1.0);
    out.result["e_squared"] = std::exp(2.0);
    auto table = ratio_table("n", "agents", "market size");
    table.add_row(ratio_cells(static_cast<long long>(n), rep));
    out.table = std::move(table);
    return out;
}

Output reproduce_asymptotic() {
    const double r = 10.0;
    const Distribution f = make_cond_exponential(r, 2.0);
    const double f0 = f.cdf(0.0);
    const std::vector<int> ns{1, 10, 100, 1000};
    std::vector<RatioReport> reps(ns.size());
    parallel_for(ns.size(), [&](std::size_t k) { reps[k] = ratios(f, r, ns[k]); });
    Output out;
    out.manifest.estimator = "quadrature";
    out.result = json::array();
    CsvTable table({{"n", "agents", "market size"},
                    {"poa", "ratio", "computed u_fb / u_star"},
                    {"podm", "ratio", "computed u_sb / u_star"},
                    {"bound", "ratio", "closed-form asymptotic PoA bound at this F(0)"}});
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const double bound = asymptotic_poa_bound(ns[k], f0);
        out.result.push_back({{"n", ns[k]}, {"poa", reps[k].poa}, {"podm", reps[k].podm}, {"bound", bound}, {"f0", f0}});
        table.add_row({static_cast<long long>(ns[k]), reps[k].poa, reps[k].podm, bound});
    }
    out.table = std::move(table);
    return out;
}

Output reproduce_appendix_b(const RunConfig& cfg) {
    const auto rep = nonmonotonicity_demo(cfg.samples, cfg.seed);
    Output out;
    out.manifest.estimator = "monte_carlo";
    out.manifest.samples = rep.samples;
    out.manifest.std_error = rep.second_lowest_std_error;
    out.result = rep.to_json();
    CsvTable table({{"intermediary", "-", "mechanism the intermediary is restricted to"},
                    {"principal_utility", "money", "principal's best utility facing it"}});
    table.add_row({std::string("unrestricted"), rep.u_unrestricted});
    table.add_row({std::string("never_assign"), rep.u_never_assign});
    table.add_row({std::string("second_lowest"), rep.u_second_lowest});
    out.table = std::move(table);
    return out;
}

int cmd_reproduce(const RunConfig& cfg) {
    Output out;
    if (cfg.target == "example1") {
        out = reproduce_example1(cfg);
    } else if (cfg.target == "staircase") {
        std::vector<int> ks{4, 6, 10};
        if (!cfg.range.empty()) {
            ks.clear();
            for (double v : parse_range(cfg.range)) ks.push_back(as_int(v, "K"));
        }
        out = reproduce_staircase(ks);
    } else if (cfg.target == "condexp") {
        out = reproduce_condexp();
    } else if (cfg.target == "table4") {
        out = table4_output(cfg.taus_path, cfg.n_max);
    } else if (cfg.target == "appendixB") {
        out = reproduce_appendix_b(cfg);
    } else if (cfg.target == "asymptotic") {
        out = reproduce_asymptotic();
    } else {
        fail(ErrorCode::BadParams, "unknown reproduce target '" + cfg.target + "'");
    }
    emit(cfg, out);
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    const auto values = parse_range(cfg.range);
    Output out;
    out.manifest.estimator = "quadrature";
    std::vector<std::vector<CsvTable::Cell>> rows(values.size());

    if (cfg.axis == "kappa") {
        // The staircase family indexed by K, with kappa = 2^K / ln 2.
        std::vector<int> ks;
        for (double v : values) ks.push_back(as_int(v, "K"));
        auto staircase = reproduce_staircase(ks);
        out.result = staircase.result;
        out.table = std::move(staircase.table);
        emit(cfg, out);
        return 0;
    }

    const auto sym = symmetric_view(load_instance(cfg));
    if (cfg.axis == "n") {
        double f0 = sym.f.cdf(0.0);
        if (sym.f.support_hi() <= 0.0) f0 = 1.0;
        auto table = ratio_table("n", "agents", "market size");
        std::vector<RatioReport> reps(values.size());
        std::vector<int> ns;
        for (double v : values) ns.push_back(as_int(v, "n"));
        parallel_for(ns.size(), [&](std::size_t k) { reps[k] = ratios(sym.f, sym.r, ns[k]); });
        out.result = json::array();
        for (std::size_t k = 0; k < ns.size(); ++k) {
            auto j = reps[k].to_json();
            j["n"] = ns[k];
            if (f0 < 1.0) j["asymptotic_poa_bound"] = asymptotic_poa_bound(ns[k], f0);
            out.result.push_back(j);
            table.add_row(ratio_cells(static_cast<long long>(ns[k]), reps[k]));
        }
        out.table = std::move(table);
    } else if (cfg.axis == "alpha") {
        CsvTable table({{"alpha", "share", "linear contract"},
                        {"z_alpha", "money", "threshold contribution (1 - alpha) r + theta_alpha"},
                        {"utility", "money", "principal utility"}});
        std::vector<double> z(values.size()), u(values.size());
        parallel_for(values.size(), [&](std::size_t k) {
            z[k] = threshold_for_alpha(sym.f, sym.r, values[k]);
            u[k] = linear_contract_utility_iid(sym.f, sym.r, sym.n, values[k]);
        });
        out.result = json::array();
        for (std::size_t k = 0; k < values.size(); ++k) {
            out.result.push_back({{"alpha", values[k]}, {"z_alpha", z[k]}, {"utility", u[k]}});
            table.add_row({values[k], z[k], u[k]});
        }
        out.table = std::move(table);
    } else if (cfg.axis == "z") {
        CsvTable table({{"z", "money", "threshold contribution"},
                        {"phi", "money", "virtual value at z"},
                        {"utility", "money", "phi(z) times the chance some agent clears z"}});
        out.result = json::array();
        for (double z : values) {
            const double phi = virtual_value(sym.f, z);
            const double u = principal_utility_iid(sym.f, sym.r, sym.n, z);
            out.result.push_back({{"z", z}, {"phi", phi}, {"utility", u}});
            table.add_row({z, phi, u});
        }
        out.table = std::move(table);
    } else {
        fail(ErrorCode::BadParams, "axis must be one of n, alpha, z, kappa");
    }
    emit(cfg, out);
    return 0;
}

}  // namespace

int run(const RunConfig& cfg) {
    try {
        if (cfg.samples < 1) fail(ErrorCode::BadParams, "--samples must be at least 1");
        if (cfg.command == "dist-analyze") return cmd_dist_analyze(cfg);
        if (cfg.command == "contract-optimize") return cmd_contract_optimize(cfg);
        if (cfg.command == "contract-robust") return cmd_contract_robust(cfg);
        if (cfg.command == "simulate") return cmd_simulate(cfg);
        if (cfg.command == "ratios") return cmd_ratios(cfg);
        if (cfg.command == "reproduce") return cmd_reproduce(cfg);
        if (cfg.command == "table4") return cmd_table4(cfg);
        if (cfg.command == "sweep") return cmd_sweep(cfg);
        fail(ErrorCode::BadParams, "unknown command '" + cfg.command + "'");
    } catch (const Error& e) {
        diagnostic("error", to_string(e.code()), e.what());
        return e.code() == ErrorCode::NonConvergence ? 3 : 2;
    } catch (const json::exception& e) {
        diagnostic("error", to_string(ErrorCode::BadParams), e.what());
        return 2;
    } catch (const std::out_of_range& e) {
        diagnostic("error", to_string(ErrorCode::BadParams), e.what());
        return 2;
    }
}

}  // namespace dmw::cli
