#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthctl/csv.hpp"
#include "synthctl/loo.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/placebo.hpp"
#include "synthctl/scm.hpp"
#include "synthctl/transforms.hpp"

namespace synthctl {

namespace fs = std::filesystem;

inline void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << text;
}

inline void write_json_file(const fs::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// JSON fragments
// ---------------------------------------------------------------------------

inline json week_range_to_json(const PanelDataset& panel, WeekRange r) {
    return {{"start", panel.week_index()[r.first].to_iso()},
            {"end", panel.week_index()[r.last].to_iso()},
            {"weeks", r.length()}};
}

inline json study_to_json(const PanelDataset& panel, const StudySpec& spec) {
    return {{"treated_unit", spec.treated_unit},
            {"donor_units", spec.donor_units},
            {"outcome_variable", spec.outcome_variable},
            {"predictor_variables", spec.predictor_variables},
            {"treatment_week", panel.week_index()[spec.treatment_week].to_iso()},
            {"pre_window", week_range_to_json(panel, spec.pre_window)},
            {"post_window", week_range_to_json(panel, spec.post_window)}};
}

inline json weights_to_json(const std::vector<std::string>& names,
                            const std::vector<double>& weights) {
    json out = json::array();
    for (std::size_t i = 0; i < names.size(); ++i)
        out.push_back({{"name", names[i]}, {"weight", weights[i]}});
    return out;
}

inline json balance_to_json(const BalanceTable& balance) {
    json out = json::array();
    for (const auto& row : balance)
        out.push_back({{"predictor", row.predictor},
                       {"treated", row.treated},
                       {"synthetic", row.synthetic},
                       {"sample_mean", row.sample_mean},
                       {"improvement", row.improvement}});
    return out;
}

inline json series_to_json(const PanelDataset& panel, const FitResult& fit) {
    json weeks = json::array(), treated = json::array(), synthetic = json::array(),
         gap = json::array();
    for (std::size_t w = 0; w < panel.week_count(); ++w) {
        weeks.push_back(panel.week_index()[w].to_iso());
        treated.push_back(fit.treated_outcome[w]);
        synthetic.push_back(fit.synthetic_outcome[w]);
        gap.push_back(fit.gap[w]);
    }
    return {{"week", std::move(weeks)},
            {"treated", std::move(treated)},
            {"synthetic", std::move(synthetic)},
            {"gap", std::move(gap)}};
}

inline json fit_summary_to_json(const FitResult& fit) {
    json summary = {{"average_post_gap", fit.average_post_gap},
                    {"pre_mspe", fit.pre_mspe},
                    {"post_mspe", fit.post_mspe}};
    if (fit.pre_mspe > 0.0)
        summary["mspe_ratio"] = fit.post_mspe / fit.pre_mspe;
    else
        summary["mspe_ratio"] = nullptr;
    return summary;
}

inline json diagnostics_to_json(const FitDiagnostics& d) {
    return {{"degenerate", d.degenerate},
            {"used_fallback", d.used_fallback},
            {"predictor_objective", d.predictor_objective},
            {"outer_evaluations", d.outer_evaluations},
            {"starts", d.starts},
            {"seed", d.seed}};
}

// ---------------------------------------------------------------------------
// CSV artifacts
// ---------------------------------------------------------------------------

/// Weight table ordered by descending weight (ties by name), the way the
/// published tables list them.
inline void write_weights_csv(const fs::path& path, const std::string& id_header,
                              const std::vector<std::string>& names,
                              const std::vector<double>& weights) {
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (weights[l] != weights[r]) return weights[l] > weights[r];
        return names[l] < names[r];
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    write_csv_row(out, {id_header, "weight"});
    for (std::size_t i : order)
        write_csv_row(out, {names[i], format_double(weights[i])});
}

inline void write_balance_csv(const fs::path& path, const BalanceTable& balance) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    write_csv_row(out, {"predictor", "treated", "synthetic", "sample_mean",
                        "improvement"});
    for (const auto& row : balance)
        write_csv_row(out, {row.predictor, format_double(row.treated),
                            format_double(row.synthetic),
                            format_double(row.sample_mean),
                            format_double(row.improvement)});
}

inline void write_series_csv(const fs::path& path, const PanelDataset& panel,
                             const FitResult& fit) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    write_csv_row(out, {"week", "treated", "synthetic", "gap"});
    for (std::size_t w = 0; w < panel.week_count(); ++w)
        write_csv_row(out, {panel.week_index()[w].to_iso(),
                            format_double(fit.treated_outcome[w]),
                            format_double(fit.synthetic_outcome[w]),
                            format_double(fit.gap[w])});
}

/// Gap overlay, one column per fitted unit; `skip` columns are left out
/// (the per-cutoff plot files).
inline void write_gap_overlay_csv(const fs::path& path, const PanelDataset& panel,
                                  const std::vector<UnitFitOutcome>& fits,
                                  const std::vector<std::string>& skip = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    std::vector<const UnitFitOutcome*> cols;
    for (const auto& f : fits) {
        if (!f.ok) continue;
        if (std::find(skip.begin(), skip.end(), f.unit) != skip.end()) continue;
        cols.push_back(&f);
    }
    std::vector<std::string> header{"week"};
    for (const auto* f : cols) header.push_back(f->unit);
    write_csv_row(out, header);
    for (std::size_t w = 0; w < panel.week_count(); ++w) {
        std::vector<std::string> row{panel.week_index()[w].to_iso()};
        for (const auto* f : cols) row.push_back(format_double(f->fit.gap[w]));
        write_csv_row(out, row);
    }
}

inline void write_ratio_csv(const fs::path& path,
                            const std::vector<UnitFitOutcome>& fits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    write_csv_row(out, {"unit", "pre_mspe", "post_mspe", "ratio", "status"});
    for (const auto& f : fits) {
        if (f.ok)
            write_csv_row(out, {f.unit, format_double(f.fit.pre_mspe),
                                format_double(f.fit.post_mspe),
                                format_double(f.ratio), "ok"});
        else
            write_csv_row(out, {f.unit, "", "", "", "failed"});
    }
}

inline void write_loo_csv(const fs::path& path, const LooReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    write_csv_row(out, {"excluded_donor", "baseline_weight", "average_post_gap",
                        "pre_mspe", "sign_flipped", "pre_fit_degraded", "status"});
    for (const auto& e : report.entries) {
        if (e.ok)
            write_csv_row(out,
                          {e.excluded_donor, format_double(e.baseline_weight),
                           format_double(e.average_post_gap),
                           format_double(e.fit.pre_mspe),
                           e.sign_flipped ? "true" : "false",
                           e.pre_fit_degraded ? "true" : "false", "ok"});
        else
            write_csv_row(out, {e.excluded_donor, format_double(e.baseline_weight),
                                "", "", "", "", "failed"});
    }
}

/// "10x", "100x", or "none" for file names and labels.
inline std::string cutoff_label(std::optional<double> cutoff) {
    if (!cutoff) return "none";
    return format_double(*cutoff) + "x";
}

}  // namespace synthctl
