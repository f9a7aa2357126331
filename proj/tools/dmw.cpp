#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "dmw/report.hpp"

namespace {

void add_common(CLI::App* sub, dmw::cli::RunConfig& cfg, bool needs_instance) {
    auto* inst = sub->add_option("--instance", cfg.instance_path, "instance or distribution JSON file");
    if (needs_instance) inst->check(CLI::ExistingFile);
    sub->add_option("--seed", cfg.seed, "64-bit seed for every random draw");
    sub->add_option("--samples", cfg.samples, "Monte-Carlo sample count")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out, "output file (stdout when omitted)");
    const std::map<std::string, dmw::cli::Format> formats{{"json", dmw::cli::Format::json}, {"csv", dmw::cli::Format::csv}};
    sub->add_option("--format", cfg.format, "json or csv")->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
    dmw::cli::RunConfig cfg;
    CLI::App app{"Principal, intermediary and agents: contract and mechanism workbench"};
    app.set_version_flag("--version", std::string(dmw::library_version()));
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("dist-analyze", "reserve, revenue and classification of distributions");
    add_common(analyze, cfg, true);
    analyze->add_option("--z", cfg.z_points, "comma-separated points for cdf, pdf, virtual value and hazard");

    auto* optimize = app.add_subcommand("contract-optimize", "principal's optimal contract");
    add_common(optimize, cfg, true);
    optimize->add_option("--mode", cfg.mode, "auto, iid, posted, identical or general")
        ->check(CLI::IsMember({"auto", "iid", "posted", "identical", "general"}));

    auto* robust = app.add_subcommand("contract-robust", "contract for a market size known only up to [s, ell]");
    add_common(robust, cfg, true);
    robust->add_option("--s", cfg.s, "smallest market size")->required();
    robust->add_option("--ell", cfg.ell, "largest market size")->required();
    robust->add_option("--regime", cfg.regime, "regular_design_for_ell or mhr_design_for_s");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo utilities of a mechanism under a contract");
    add_common(simulate, cfg, true);
    simulate->add_option("--mechanism", cfg.mechanism, "vwm, anonymous, first_price_fixture, second_lowest or never_assign");
    simulate->add_option("--alpha", cfg.alpha, "linear contract share");
    simulate->add_option("--contract", cfg.contract, "comma-separated per-outcome shares");

    auto* rat = app.add_subcommand("ratios", "first-best, second-best, optimal and posted utilities with their ratios");
    add_common(rat, cfg, true);

    auto* repro = app.add_subcommand("reproduce", "regenerate a worked example or table");
    add_common(repro, cfg, false);
    repro->add_option("target", cfg.target, "example1, staircase, condexp, table4, appendixB or asymptotic")
        ->required()
        ->check(CLI::IsMember({"example1", "staircase", "condexp", "table4", "appendixB", "asymptotic"}));
    repro->add_option("--taus", cfg.taus_path, "tau table JSON (table4)");
    repro->add_option("--n-max", cfg.n_max, "largest n (table4)");
    repro->add_option("--range", cfg.range, "K range lo:hi:step (staircase)");

    auto* table4 = app.add_subcommand("table4", "PoDM upper bounds for MHR distributions from a tau table");
    add_common(table4, cfg, false);
    table4->add_option("--taus", cfg.taus_path, "tau table JSON (defaults to the shipped table)");
    table4->add_option("--n-max", cfg.n_max, "largest n");

    auto* sweep = app.add_subcommand("sweep", "one row per axis value");
    add_common(sweep, cfg, false);
    sweep->add_option("--axis", cfg.axis, "n, alpha, z or kappa")->required()->check(CLI::IsMember({"n", "alpha", "z", "kappa"}));
    sweep->add_option("--range", cfg.range, "lo:hi:step")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << nlohmann::json{{"level", "error"}, {"code", "BadParams"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    // table4 and sweep are table-shaped; default them to CSV unless asked otherwise.
    if ((cfg.command == "table4" || cfg.command == "sweep") && app.get_subcommands().front()->count("--format") == 0) {
        cfg.format = dmw::cli::Format::csv;
    }
    return dmw::cli::run(cfg);
}
