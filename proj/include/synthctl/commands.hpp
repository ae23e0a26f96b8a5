#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "synthctl/config.hpp"
#include "synthctl/loo.hpp"
#include "synthctl/pipeline.hpp"
#include "synthctl/placebo.hpp"
#include "synthctl/report.hpp"
#include "synthctl/synthgen.hpp"

namespace synthctl {

struct CommandResult {
    json result;                  // the machine-readable result document
    std::vector<fs::path> files;  // everything written, result document last
};

namespace detail {

inline void ensure_out_dir(const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec && !fs::is_directory(out_dir))
        throw DataError("cannot create output directory: " + out_dir.string());
}

inline PanelDataset load_prepared_panel(const fs::path& path,
                                        const StudyConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("prepared panel not found: " + path.string() +
                        " (run the prepare command first)");
    auto observations = load_long_csv(in);
    // Each row is already one observation per week bucket, so aggregation is
    // the identity here.
    return to_weekly(observations, cfg.week_anchor, cfg.weekly_aggregation);
}

}  // namespace detail

/// prepare: raw long CSV in, validated weekly panel + prep report out.
inline CommandResult run_prepare(const StudyConfig& cfg, const fs::path& out_dir) {
    detail::ensure_out_dir(out_dir);

    std::vector<std::string> notes;
    PanelDataset panel = prepare_panel(cfg, &notes);

    ScreeningResult screening;
    std::vector<std::string> warnings;
    StudySpec spec = resolve_spec(cfg, panel, &screening, &warnings);

    CommandResult out;
    const fs::path panel_path = out_dir / "panel.csv";
    {
        std::ostringstream body;
        write_panel_long_csv(body, panel);
        write_text_file(panel_path, body.str());
    }
    out.files.push_back(panel_path);

    json screening_json = {{"kept", screening.kept},
                           {"dropped_constant", screening.dropped_constant}};
    json excluded = json::array();
    for (const auto& e : screening.excluded)
        excluded.push_back({{"name", e.name},
                            {"conflicts_with", e.conflicts_with},
                            {"correlation", e.correlation}});
    screening_json["excluded"] = std::move(excluded);

    out.result = {{"command", "prepare"},
                  {"input_csv", cfg.input_csv},
                  {"week_anchor", weekday_name(cfg.week_anchor)},
                  {"weekly_aggregation", weekly_aggregation_name(cfg.weekly_aggregation)},
                  {"units", panel.unit_ids()},
                  {"variables", panel.variables()},
                  {"weeks", {{"first", panel.week_index().front().to_iso()},
                             {"last", panel.week_index().back().to_iso()},
                             {"count", panel.week_count()}}},
                  {"study", study_to_json(panel, spec)},
                  {"screening", std::move(screening_json)},
                  {"derived", notes},
                  {"warnings", warnings},
                  {"panel_csv", panel_path.filename().string()}};

    const fs::path result_path = out_dir / "prepare_result.json";
    write_json_file(result_path, out.result);
    out.files.push_back(result_path);
    return out;
}

/// fit: nested SCM fit -> weight/balance/series tables + result document.
inline CommandResult run_fit(const StudyConfig& cfg, const fs::path& out_dir,
                             const fs::path& panel_path) {
    detail::ensure_out_dir(out_dir);
    PanelDataset panel = detail::load_prepared_panel(panel_path, cfg);

    std::vector<std::string> warnings;
    StudySpec spec = resolve_spec(cfg, panel, nullptr, &warnings);
    FitResult fit = fit_study(panel, spec, fit_options_from(cfg, cfg.seed));

    CommandResult out;
    const fs::path donor_path = out_dir / "donor_weights.csv";
    const fs::path predictor_path = out_dir / "predictor_weights.csv";
    const fs::path balance_path = out_dir / "balance.csv";
    const fs::path series_path = out_dir / "series.csv";
    write_weights_csv(donor_path, "donor", fit.donor_weights.units,
                      fit.donor_weights.weights);
    write_weights_csv(predictor_path, "predictor",
                      fit.predictor_weights.predictors,
                      fit.predictor_weights.weights);
    write_balance_csv(balance_path, fit.balance);
    write_series_csv(series_path, panel, fit);
    out.files = {donor_path, predictor_path, balance_path, series_path};

    out.result = {{"command", "fit"},
                  {"seed", cfg.seed},
                  {"study", study_to_json(panel, spec)},
                  {"donor_weights", weights_to_json(fit.donor_weights.units,
                                                    fit.donor_weights.weights)},
                  {"predictor_weights",
                   weights_to_json(fit.predictor_weights.predictors,
                                   fit.predictor_weights.weights)},
                  {"balance", balance_to_json(fit.balance)},
                  {"summary", fit_summary_to_json(fit)},
                  {"series", series_to_json(panel, fit)},
                  {"diagnostics", diagnostics_to_json(fit.diagnostics)},
                  {"warnings", warnings}};

    const fs::path result_path = out_dir / "fit_result.json";
    write_json_file(result_path, out.result);
    out.files.push_back(result_path);
    return out;
}

enum class PlaceboMode { space, time, outcome };

inline PlaceboMode parse_placebo_mode(const std::string& s) {
    if (s == "space") return PlaceboMode::space;
    if (s == "time") return PlaceboMode::time;
    if (s == "outcome") return PlaceboMode::outcome;
    throw UsageError("unknown placebo mode: " + s + " (use space|time|outcome)");
}

/// placebo: in-space rank study, in-time shifted refit, or outcome swap.
inline CommandResult run_placebo(const StudyConfig& cfg, const fs::path& out_dir,
                                 const fs::path& panel_path, PlaceboMode mode,
                                 std::optional<std::size_t> shift_override = {},
                                 std::optional<std::string> swap_override = {}) {
    detail::ensure_out_dir(out_dir);
    PanelDataset panel = detail::load_prepared_panel(panel_path, cfg);

    std::vector<std::string> warnings;
    StudySpec spec = resolve_spec(cfg, panel, nullptr, &warnings);
    const FitOptions fit_options = fit_options_from(cfg, cfg.seed);

    CommandResult out;
    const fs::path result_path = out_dir / "placebo_result.json";

    if (mode == PlaceboMode::space) {
        auto fits = placebo_unit_fits(panel, spec, fit_options);

        const fs::path gaps_path = out_dir / "placebo_gaps.csv";
        const fs::path ratios_path = out_dir / "placebo_ratios.csv";
        write_gap_overlay_csv(gaps_path, panel, fits);
        write_ratio_csv(ratios_path, fits);
        out.files = {gaps_path, ratios_path};

        // One study per configured cutoff, plus the no-limit variant.
        std::vector<std::optional<double>> cutoffs;
        for (double c : cfg.placebo.cutoff_multiples) cutoffs.emplace_back(c);
        cutoffs.emplace_back(std::nullopt);

        json cutoffs_json = json::array();
        json units_json = json::array();
        PlaceboStudy reference;
        for (std::size_t i = 0; i < cutoffs.size(); ++i) {
            PlaceboStudy study = assemble_placebo_study(
                fits, spec, cutoffs[i], cfg.placebo.rank_within_cutoff);
            const std::string label = cutoff_label(cutoffs[i]);
            const fs::path overlay =
                out_dir / ("placebo_gaps_cutoff_" + label + ".csv");
            write_gap_overlay_csv(overlay, panel, fits, study.discarded);
            out.files.push_back(overlay);
            json entry = {{"label", label},
                          {"discarded", study.discarded},
                          {"treated_rank", study.treated_rank},
                          {"ranked_units", study.ratios.size() -
                                               (cfg.placebo.rank_within_cutoff
                                                    ? study.discarded.size()
                                                    : 0)},
                          {"p_value", study.p_value}};
            entry["cutoff"] = cutoffs[i] ? json(*cutoffs[i]) : json(nullptr);
            cutoffs_json.push_back(std::move(entry));
            if (i + 1 == cutoffs.size()) reference = std::move(study);
        }
        json gaps_json;
        {
            json weeks = json::array();
            for (const auto& week : panel.week_index())
                weeks.push_back(week.to_iso());
            gaps_json["week"] = std::move(weeks);
        }
        for (const auto& f : reference.fits) {
            json u = {{"unit", f.unit}, {"ok", f.ok}};
            if (f.ok) {
                u["pre_mspe"] = f.fit.pre_mspe;
                u["post_mspe"] = f.fit.post_mspe;
                u["ratio"] = f.ratio;
                u["average_post_gap"] = f.fit.average_post_gap;
                gaps_json[f.unit] = f.fit.gap;
            } else {
                u["error"] = f.error;
            }
            units_json.push_back(std::move(u));
        }

        out.result = {{"command", "placebo"},
                      {"mode", "space"},
                      {"seed", cfg.seed},
                      {"study", study_to_json(panel, spec)},
                      {"units", std::move(units_json)},
                      {"treated_rank", reference.treated_rank},
                      {"ranked_units", reference.ratios.size()},
                      {"p_value", reference.p_value},
                      {"rank_within_cutoff", cfg.placebo.rank_within_cutoff},
                      {"cutoffs", std::move(cutoffs_json)},
                      {"gaps", std::move(gaps_json)},
                      {"warnings", reference.warnings}};
    } else if (mode == PlaceboMode::time) {
        const std::size_t shift = shift_override.value_or(cfg.placebo.shift_weeks);
        auto [fit, verdict] = placebo_in_time(panel, spec, shift, fit_options,
                                              cfg.placebo.in_time_pass_threshold);

        const fs::path series_path = out_dir / "placebo_time_series.csv";
        write_series_csv(series_path, panel, fit);
        out.files = {series_path};

        json verdict_json = {
            {"ratio", verdict.ratio},
            {"pass", verdict.pass},
            {"pass_threshold", verdict.pass_threshold},
            {"shifted_treatment_week", verdict.shifted_treatment_week.to_iso()},
            {"true_treatment_week", verdict.true_treatment_week.to_iso()}};
        verdict_json["first_divergence_week"] =
            verdict.first_divergence_week ? json(verdict.first_divergence_week->to_iso())
                                          : json(nullptr);

        out.result = {{"command", "placebo"},
                      {"mode", "time"},
                      {"seed", cfg.seed},
                      {"shift_weeks", shift},
                      {"study", study_to_json(panel, fit.spec)},
                      {"verdict", std::move(verdict_json)},
                      {"donor_weights", weights_to_json(fit.donor_weights.units,
                                                        fit.donor_weights.weights)},
                      {"summary", fit_summary_to_json(fit)},
                      {"series", series_to_json(panel, fit)},
                      {"diagnostics", diagnostics_to_json(fit.diagnostics)},
                      {"warnings", warnings}};
    } else {
        std::optional<std::string> swap = swap_override;
        if (!swap) swap = cfg.placebo.outcome_swap;
        if (!swap)
            throw UsageError(
                "outcome placebo needs placebo.outcome_swap in the config or "
                "--swap-outcome");
        FitResult fit = placebo_outcome_swap(panel, spec, *swap, fit_options);

        const fs::path series_path = out_dir / "placebo_outcome_series.csv";
        const fs::path donor_path = out_dir / "placebo_outcome_donor_weights.csv";
        write_series_csv(series_path, panel, fit);
        write_weights_csv(donor_path, "donor", fit.donor_weights.units,
                          fit.donor_weights.weights);
        out.files = {series_path, donor_path};

        out.result = {{"command", "placebo"},
                      {"mode", "outcome"},
                      {"seed", cfg.seed},
                      {"outcome_variable", *swap},
                      {"study", study_to_json(panel, fit.spec)},
                      {"donor_weights", weights_to_json(fit.donor_weights.units,
                                                        fit.donor_weights.weights)},
                      {"predictor_weights",
                       weights_to_json(fit.predictor_weights.predictors,
                                       fit.predictor_weights.weights)},
                      {"summary", fit_summary_to_json(fit)},
                      {"series", series_to_json(panel, fit)},
                      {"diagnostics", diagnostics_to_json(fit.diagnostics)},
                      {"warnings", warnings}};
    }

    write_json_file(result_path, out.result);
    out.files.push_back(result_path);
    return out;
}

/// loo: baseline fit + one refit per weighted donor + robustness verdict.
inline CommandResult run_loo(const StudyConfig& cfg, const fs::path& out_dir,
                             const fs::path& panel_path) {
    detail::ensure_out_dir(out_dir);
    PanelDataset panel = detail::load_prepared_panel(panel_path, cfg);

    std::vector<std::string> warnings;
    StudySpec spec = resolve_spec(cfg, panel, nullptr, &warnings);
    const FitOptions fit_options = fit_options_from(cfg, cfg.seed);
    FitResult baseline = fit_study(panel, spec, fit_options);

    LooOptions loo_options;
    loo_options.weight_floor = cfg.loo.weight_floor;
    loo_options.degradation_multiple = cfg.loo.degradation_multiple;
    loo_options.fit = fit_options;
    LooReport report = leave_one_out(panel, spec, baseline, loo_options);

    CommandResult out;
    const fs::path table_path = out_dir / "loo_report.csv";
    write_loo_csv(table_path, report);
    out.files = {table_path};

    json entries = json::array();
    for (const auto& e : report.entries) {
        json entry = {{"excluded_donor", e.excluded_donor},
                      {"baseline_weight", e.baseline_weight},
                      {"ok", e.ok}};
        if (e.ok) {
            entry["average_post_gap"] = e.average_post_gap;
            entry["pre_mspe"] = e.fit.pre_mspe;
            entry["sign_flipped"] = e.sign_flipped;
            entry["pre_fit_degraded"] = e.pre_fit_degraded;
        } else {
            entry["error"] = e.error;
        }
        entries.push_back(std::move(entry));
    }

    std::string verdict = "ROBUST: no sign flips or degraded pre-fits";
    if (!report.robust) {
        verdict = "NOT ROBUST:";
        for (const auto& e : report.entries) {
            if (e.sign_flipped)
                verdict += " excluding " + e.excluded_donor + " flips the sign;";
            if (e.pre_fit_degraded)
                verdict += " excluding " + e.excluded_donor + " degrades the pre-fit;";
            if (!e.ok) verdict += " refit without " + e.excluded_donor + " failed;";
        }
    }

    out.result = {{"command", "loo"},
                  {"seed", cfg.seed},
                  {"study", study_to_json(panel, spec)},
                  {"baseline", {{"average_post_gap", report.baseline_average_gap},
                                {"pre_mspe", report.baseline_pre_mspe},
                                {"donor_weights",
                                 weights_to_json(baseline.donor_weights.units,
                                                 baseline.donor_weights.weights)}}},
                  {"weight_floor", cfg.loo.weight_floor},
                  {"degradation_multiple", cfg.loo.degradation_multiple},
                  {"entries", std::move(entries)},
                  {"robust", report.robust},
                  {"verdict", verdict},
                  {"warnings", warnings}};

    const fs::path result_path = out_dir / "loo_result.json";
    write_json_file(result_path, out.result);
    out.files.push_back(result_path);
    return out;
}

/// synthgen: seeded factor-model fixture CSV plus its ground truth.
inline CommandResult run_synthgen(const SynthGenParams& params,
                                  const fs::path& csv_path,
                                  const fs::path& truth_path) {
    SynthGenOutput generated = generate_factor_panel(params);

    if (csv_path.has_parent_path()) detail::ensure_out_dir(csv_path.parent_path());
    {
        std::ostringstream body;
        write_observations_csv(body, generated.observations);
        write_text_file(csv_path, body.str());
    }

    CommandResult out;
    out.files.push_back(csv_path);
    out.result = {{"command", "synthgen"},
                  {"seed", params.seed},
                  {"units", params.units},
                  {"weeks", params.weeks},
                  {"factors", params.factors},
                  {"predictors", generated.truth.predictor_count},
                  {"effect", params.effect},
                  {"noise_sd", generated.truth.noise_sd},
                  {"treated_unit", generated.truth.treated_unit},
                  {"treatment_week", generated.truth.treatment_week.to_iso()},
                  {"treatment_week_index", generated.truth.treatment_week_index},
                  {"treated_mixture",
                   [&] {
                       json mix = json::array();
                       for (const auto& [unit, weight] : generated.truth.treated_mixture)
                           mix.push_back({{"unit", unit}, {"weight", weight}});
                       return mix;
                   }()},
                  {"csv", csv_path.filename().string()}};

    if (truth_path.has_parent_path())
        detail::ensure_out_dir(truth_path.parent_path());
    write_json_file(truth_path, out.result);
    out.files.push_back(truth_path);
    return out;
}

}  // namespace synthctl
