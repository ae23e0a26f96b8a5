#pragma once

// Shared test fixtures: small hand-built panels and a temp-dir RAII helper.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "synthctl/panel.hpp"
#include "synthctl/rng.hpp"

namespace fixtures {

using synthctl::Date;
using synthctl::PanelDataset;
using synthctl::PanelDraft;
using synthctl::StudySpec;

inline Date week(int i) { return Date::parse_iso("2023-04-02") + 7 * i; }

/// Panel builder: values[v][u] is the per-week series of variable v, unit u.
inline PanelDataset make_panel(
    const std::vector<std::string>& units, int weeks,
    const std::vector<std::string>& variables,
    const std::vector<std::vector<std::vector<double>>>& values) {
    PanelDraft draft;
    draft.unit_ids = units;
    for (int w = 0; w < weeks; ++w) draft.week_index.push_back(week(w));
    draft.variables = variables;
    for (const auto& per_variable : values)
        for (const auto& series : per_variable)
            draft.values.insert(draft.values.end(), series.begin(), series.end());
    return synthctl::validate_panel(draft);
}

/// Random panel: one outcome plus `predictors` predictor variables, all
/// series positive and seeded.
inline PanelDataset random_panel(std::uint64_t seed, int units, int weeks,
                                 int predictors) {
    synthctl::Rng rng(seed);
    std::vector<std::string> unit_ids, variables;
    for (int u = 0; u < units; ++u) unit_ids.push_back("u" + std::to_string(u));
    variables.push_back("outcome");
    for (int p = 0; p < predictors; ++p)
        variables.push_back("pred" + std::to_string(p));

    std::vector<std::vector<std::vector<double>>> values;
    for (const auto& variable : variables) {
        (void)variable;
        std::vector<std::vector<double>> per_variable;
        for (int u = 0; u < units; ++u) {
            std::vector<double> series;
            double level = rng.uniform(50.0, 150.0);
            for (int w = 0; w < weeks; ++w) {
                level += rng.normal(0.0, 3.0);
                series.push_back(level);
            }
            per_variable.push_back(std::move(series));
        }
        values.push_back(std::move(per_variable));
    }
    return make_panel(unit_ids, weeks, variables, values);
}

inline StudySpec basic_spec(const PanelDataset& panel, std::size_t treatment_week) {
    StudySpec spec;
    spec.treated_unit = panel.unit_ids().front();
    spec.donor_units.assign(panel.unit_ids().begin() + 1, panel.unit_ids().end());
    spec.outcome_variable = "outcome";
    for (const auto& v : panel.variables())
        if (v != "outcome") spec.predictor_variables.push_back(v);
    spec.treatment_week = treatment_week;
    spec.pre_window = {0, treatment_week - 1};
    spec.post_window = {treatment_week, panel.week_count() - 1};
    return spec;
}

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("synthctl_test_" + tag + "_" +
                        std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures
