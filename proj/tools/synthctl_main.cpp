// synthctl — synthetic-control studies on weekly panels from the command line.
//
// Subcommands mirror the study lifecycle: prepare a panel from a long CSV,
// fit the synthetic control, run placebo suites, run the leave-one-out
// sensitivity analysis, and generate seeded test fixtures.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 optimization error.

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "synthctl/commands.hpp"

namespace {

namespace fs = std::filesystem;
using namespace synthctl;

StudyConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    StudyConfig cfg = parse_config_text(text.str());
    if (seed) cfg.seed = *seed;
    return cfg;
}

void print_files(const CommandResult& result) {
    for (const auto& f : result.files) std::cout << "wrote " << f.string() << "\n";
}

int dispatch(int argc, char** argv) {
    CLI::App app{"synthetic control studies on weekly panel data"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string panel_path;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* cmd, bool with_panel) {
        cmd->add_option("--config", config_path, "study config (JSON)")->required();
        cmd->add_option("--out-dir", out_dir, "output directory");
        cmd->add_option("--seed", seed, "override the config seed");
        if (with_panel)
            cmd->add_option("--panel", panel_path,
                            "prepared panel CSV (default <out-dir>/panel.csv)");
    };

    auto* prepare = app.add_subcommand("prepare", "build the validated weekly panel");
    add_common(prepare, false);

    auto* fit = app.add_subcommand("fit", "fit the synthetic control");
    add_common(fit, true);

    auto* placebo = app.add_subcommand("placebo", "run a placebo study");
    add_common(placebo, true);
    std::string mode = "space";
    std::optional<std::size_t> shift;
    std::optional<std::string> swap_outcome;
    placebo->add_option("--mode", mode, "space|time|outcome")->required();
    placebo->add_option("--shift", shift, "in-time shift in weeks (mode=time)");
    placebo->add_option("--swap-outcome", swap_outcome,
                        "replacement outcome variable (mode=outcome)");

    auto* loo = app.add_subcommand("loo", "leave-one-out sensitivity analysis");
    add_common(loo, true);

    auto* synthgen =
        app.add_subcommand("synthgen", "generate a seeded factor-model fixture");
    SynthGenParams params;
    std::string gen_out = "synthetic_panel.csv";
    std::string gen_truth;
    synthgen->add_option("--out", gen_out, "fixture CSV path");
    synthgen->add_option("--truth", gen_truth,
                         "ground-truth JSON path (default <out>.truth.json)");
    synthgen->add_option("--units", params.units, "number of units (>= 3)");
    synthgen->add_option("--weeks", params.weeks, "number of weeks (>= 10)");
    synthgen->add_option("--factors", params.factors, "number of common factors");
    synthgen->add_option("--effect", params.effect,
                         "additive treatment effect on the treated unit");
    synthgen->add_option("--noise", params.noise_sd_fraction,
                         "noise sd as a fraction of the outcome scale");
    synthgen->add_option("--treatment-week", params.treatment_week,
                         "treatment week index (default 3/4 of the horizon)");
    std::uint64_t gen_seed = params.seed;
    synthgen->add_option("--seed", gen_seed, "generator seed");

    app.parse(argc, argv);

    if (*synthgen) {
        params.seed = gen_seed;
        const fs::path truth =
            gen_truth.empty() ? fs::path(gen_out + ".truth.json") : fs::path(gen_truth);
        auto result = run_synthgen(params, gen_out, truth);
        print_files(result);
        return 0;
    }

    StudyConfig cfg = load_config(config_path, seed);
    const fs::path out(out_dir);
    const fs::path panel =
        panel_path.empty() ? out / "panel.csv" : fs::path(panel_path);

    CommandResult result;
    if (*prepare) {
        result = run_prepare(cfg, out);
        std::cout << "panel: " << result.result["units"].size() << " units x "
                  << result.result["weeks"]["count"] << " weeks, "
                  << result.result["variables"].size() << " variables\n";
    } else if (*fit) {
        result = run_fit(cfg, out, panel);
        const auto& summary = result.result["summary"];
        std::cout << "average_post_gap=" << summary["average_post_gap"]
                  << " pre_mspe=" << summary["pre_mspe"]
                  << " post_mspe=" << summary["post_mspe"] << "\n";
    } else if (*placebo) {
        result = run_placebo(cfg, out, panel, parse_placebo_mode(mode), shift,
                             swap_outcome);
        if (result.result["mode"] == "space")
            std::cout << "treated_rank=" << result.result["treated_rank"]
                      << " p_value=" << result.result["p_value"] << "\n";
        else if (result.result["mode"] == "time")
            std::cout << "ratio=" << result.result["verdict"]["ratio"]
                      << " pass=" << result.result["verdict"]["pass"] << "\n";
        else
            std::cout << "average_post_gap="
                      << result.result["summary"]["average_post_gap"] << "\n";
    } else if (*loo) {
        result = run_loo(cfg, out, panel);
        std::cout << result.result["verdict"].get<std::string>() << "\n";
    }
    print_files(result);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const CLI::ParseError& e) {
        CLI::App app;
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const OptimizerFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
