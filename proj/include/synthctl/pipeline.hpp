#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "synthctl/config.hpp"
#include "synthctl/ingest.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/scm.hpp"
#include "synthctl/transforms.hpp"

namespace synthctl {

/// Derives the configured variables on top of a validated weekly panel:
/// the wallet-value outcome (when configured) and the per-variable log /
/// max-normalization transforms. Derived variables are added; raw columns
/// stay in place.
inline PanelDataset derive_variables(const PanelDataset& weekly,
                                     const StudyConfig& cfg,
                                     std::vector<std::string>* notes = nullptr) {
    PanelDataset panel = weekly;

    if (cfg.outcome.wallet_value) {
        const std::size_t source = panel.variable_index(cfg.outcome.source);
        std::size_t baseline = 0;
        if (cfg.outcome.baseline_week) {
            auto idx = panel.week_index_of(*cfg.outcome.baseline_week);
            if (!idx)
                throw DataError("wallet-value baseline week " +
                                cfg.outcome.baseline_week->to_iso() +
                                " is not a panel week");
            baseline = *idx;
        }
        std::vector<double> values;
        values.reserve(panel.unit_count() * panel.week_count());
        for (std::size_t u = 0; u < panel.unit_count(); ++u) {
            std::vector<double> series;
            try {
                series = wallet_value(panel.series(source, u), baseline);
            } catch (const NonPositiveBaselinePriceError&) {
                throw NonPositiveBaselinePriceError(
                    "unit " + panel.unit_ids()[u] + ", variable " +
                    cfg.outcome.source + ", week " +
                    panel.week_index()[baseline].to_iso());
            }
            values.insert(values.end(), series.begin(), series.end());
        }
        panel = panel.with_variable(cfg.outcome.name, values);
        if (notes)
            notes->push_back("derived " + cfg.outcome.name + " from " +
                             cfg.outcome.source + " (baseline " +
                             panel.week_index()[baseline].to_iso() + ")");
    } else if (!panel.has_variable(cfg.outcome.name)) {
        throw UnknownVariableError(cfg.outcome.name);
    }

    for (const auto& t : cfg.transforms) {
        if (t.op == VariableTransform::none) continue;
        const std::size_t source = panel.variable_index(t.variable);
        const std::string derived = transformed_variable_name(t.variable, t.op);
        std::vector<double> values;
        values.reserve(panel.unit_count() * panel.week_count());
        for (std::size_t u = 0; u < panel.unit_count(); ++u) {
            std::vector<double> series =
                t.op == VariableTransform::log
                    ? log_transform(panel.series(source, u), cfg.log_floor)
                    : normalize_max(panel.series(source, u));
            values.insert(values.end(), series.begin(), series.end());
        }
        panel = panel.with_variable(derived, values);
        if (notes)
            notes->push_back("derived " + derived + " from " + t.variable + " (" +
                             variable_transform_name(t.op) + ")");
    }
    return panel;
}

/// Window bounds resolved against the panel.
inline StudySpec resolve_windows(const StudyConfig& cfg, const PanelDataset& panel) {
    StudySpec spec;
    auto t0 = panel.week_index_of(cfg.treatment_week);
    if (!t0)
        throw DataError("treatment week " + cfg.treatment_week.to_iso() +
                        " is not a panel week");
    spec.treatment_week = *t0;

    std::size_t pre_first = 0;
    if (cfg.pre_start) {
        auto idx = panel.week_index_of(*cfg.pre_start);
        if (!idx)
            throw DataError("pre_start " + cfg.pre_start->to_iso() +
                            " is not a panel week");
        pre_first = *idx;
    }
    std::size_t post_last = panel.week_count() - 1;
    if (cfg.post_end) {
        auto idx = panel.week_index_of(*cfg.post_end);
        if (!idx)
            throw DataError("post_end " + cfg.post_end->to_iso() +
                            " is not a panel week");
        post_last = *idx;
    }
    if (spec.treatment_week == 0 || pre_first + 1 > spec.treatment_week)
        throw InsufficientPreWindowError(0);
    spec.pre_window = {pre_first, spec.treatment_week - 1};
    spec.post_window = {spec.treatment_week, post_last};
    return spec;
}

/// Screens predictor candidates (when a threshold is configured) and builds
/// the validated StudySpec the fit commands consume. Deterministic given the
/// prepared panel and config.
inline StudySpec resolve_spec(const StudyConfig& cfg, const PanelDataset& panel,
                              ScreeningResult* screening = nullptr,
                              std::vector<std::string>* warnings = nullptr) {
    StudySpec spec = resolve_windows(cfg, panel);
    spec.treated_unit = cfg.treated_unit;
    spec.donor_units = cfg.effective_donors();
    spec.outcome_variable = cfg.outcome.name;

    if (cfg.screen_threshold) {
        ScreeningResult result =
            screen_predictors(panel, cfg.predictor_candidates, *cfg.screen_threshold,
                              cfg.treated_unit, spec.pre_window);
        spec.predictor_variables = result.kept;
        if (warnings)
            for (const auto& dropped : result.dropped_constant)
                warnings->push_back("predictor " + dropped +
                                    " dropped: constant over the pre-window");
        if (screening) *screening = std::move(result);
    } else {
        spec.predictor_variables = cfg.predictor_candidates;
        if (screening) screening->kept = cfg.predictor_candidates;
    }
    return validate_spec(spec, panel, warnings);
}

inline FitOptions fit_options_from(const StudyConfig& cfg, std::uint64_t seed) {
    FitOptions options;
    options.seed = seed;
    options.starts = cfg.optimizer.starts;
    return options;
}

/// Reads and parses the configured input CSV.
inline std::vector<LongObservation> load_observations(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input CSV: " + path);
    try {
        return load_long_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line, e.column, path + ": " + e.reason);
    }
}

/// Full prepare step: raw long CSV -> weekly panel -> derived variables.
inline PanelDataset prepare_panel(const StudyConfig& cfg,
                                  std::vector<std::string>* notes = nullptr) {
    auto observations = load_observations(cfg.input_csv);
    PanelDataset weekly =
        to_weekly(observations, cfg.week_anchor, cfg.weekly_aggregation);
    return derive_variables(weekly, cfg, notes);
}

}  // namespace synthctl
