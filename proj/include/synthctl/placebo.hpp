#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "synthctl/csv.hpp"
#include "synthctl/rng.hpp"
#include "synthctl/scm.hpp"

namespace synthctl {

/// post/pre MSPE ratio of one fit. A zero pre-treatment MSPE means the
/// ratio is undefined (perfect, likely degenerate pre-fit).
inline double mspe_ratio(const FitResult& fit) {
    if (!(fit.pre_mspe > 0.0)) throw ZeroPreMspeError();
    return fit.post_mspe / fit.pre_mspe;
}

/// One per-unit placebo fit; failed optimizations are recorded, not dropped.
struct UnitFitOutcome {
    std::string unit;
    bool ok = false;
    FitResult fit;        // valid iff ok
    double ratio = 0.0;   // valid iff ok
    std::string error;    // set iff !ok
    bool ratio_epsilon_substituted = false;  // pre-MSPE was 0
};

/// Placebo-in-space study: every unit fitted as-if-treated, with the
/// post/pre MSPE ratio distribution and the treated unit's rank inside it.
struct PlaceboStudy {
    std::vector<UnitFitOutcome> fits;  // treated first, then donors in spec order
    std::vector<std::pair<std::string, double>> ratios;  // successfully fitted
    int treated_rank = 0;  // 1 = largest ratio; counts ties as at-least
    double p_value = 1.0;
    std::vector<std::string> discarded;  // donors beyond the pre-MSPE cutoff
    std::optional<double> cutoff_multiple;
    bool rank_within_cutoff = false;
    std::vector<std::string> warnings;
};

/// Spec for unit u: u treated, all remaining study units as donors,
/// windows/outcome/predictors unchanged.
inline StudySpec placebo_spec_for_unit(const StudySpec& spec,
                                       const std::string& unit) {
    StudySpec out = spec;
    out.treated_unit = unit;
    out.donor_units.clear();
    if (spec.treated_unit != unit) out.donor_units.push_back(spec.treated_unit);
    for (const auto& d : spec.donor_units)
        if (d != unit) out.donor_units.push_back(d);
    return out;
}

/// Fits every unit (treated and each donor) as-if-treated. Per-unit seeds are
/// derived from the study seed by position, so results do not depend on
/// evaluation order. Optimizer failures are recorded per unit.
inline std::vector<UnitFitOutcome> placebo_unit_fits(const PanelDataset& panel,
                                                     const StudySpec& spec,
                                                     const FitOptions& options = {}) {
    std::vector<std::string> units;
    units.push_back(spec.treated_unit);
    units.insert(units.end(), spec.donor_units.begin(), spec.donor_units.end());

    std::vector<UnitFitOutcome> fits;
    fits.reserve(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        UnitFitOutcome outcome;
        outcome.unit = units[i];
        FitOptions unit_options = options;
        unit_options.seed = derive_seed(options.seed, i);
        try {
            outcome.fit =
                fit_study(panel, placebo_spec_for_unit(spec, units[i]), unit_options);
            if (outcome.fit.pre_mspe > 0.0) {
                outcome.ratio = outcome.fit.post_mspe / outcome.fit.pre_mspe;
            } else {
                outcome.ratio = outcome.fit.post_mspe /
                                std::numeric_limits<double>::epsilon();
                outcome.ratio_epsilon_substituted = true;
            }
            outcome.ok = true;
        } catch (const OptimizerFailure& failure) {
            outcome.error = failure.what();
        }
        fits.push_back(std::move(outcome));
    }
    return fits;
}

/// Ranks the treated ratio and applies the pre-MSPE cutoff. The cutoff
/// shapes the plot overlay (`discarded`); the rank p-value runs over all
/// fitted units unless `rank_within_cutoff` restricts it.
inline PlaceboStudy assemble_placebo_study(std::vector<UnitFitOutcome> fits,
                                           const StudySpec& spec,
                                           std::optional<double> cutoff_multiple,
                                           bool rank_within_cutoff = false) {
    if (cutoff_multiple && !(*cutoff_multiple > 0.0))
        throw UsageError("placebo cutoff multiple must be positive");

    PlaceboStudy study;
    study.cutoff_multiple = cutoff_multiple;
    study.rank_within_cutoff = rank_within_cutoff;

    const UnitFitOutcome* treated = nullptr;
    for (const auto& f : fits)
        if (f.unit == spec.treated_unit && f.ok) treated = &f;
    if (!treated)
        throw OptimizerFailure("treated unit's placebo fit failed: " +
                               spec.treated_unit);

    for (const auto& f : fits) {
        if (!f.ok) {
            study.warnings.push_back("unit " + f.unit +
                                     " excluded from ranks: " + f.error);
            continue;
        }
        if (f.ratio_epsilon_substituted)
            study.warnings.push_back(
                "unit " + f.unit +
                " has zero pre-treatment MSPE; ratio uses machine epsilon");
        study.ratios.emplace_back(f.unit, f.ratio);
        if (cutoff_multiple && f.unit != spec.treated_unit &&
            f.fit.pre_mspe > *cutoff_multiple * treated->fit.pre_mspe)
            study.discarded.push_back(f.unit);
    }

    auto counted = [&](const std::string& unit) {
        if (!rank_within_cutoff || unit == spec.treated_unit) return true;
        return std::find(study.discarded.begin(), study.discarded.end(), unit) ==
               study.discarded.end();
    };

    const double treated_ratio = treated->ratio;
    int rank = 0, population = 0;
    for (const auto& [unit, ratio] : study.ratios) {
        if (!counted(unit)) continue;
        ++population;
        if (ratio >= treated_ratio) ++rank;
    }
    study.treated_rank = rank;
    study.p_value = static_cast<double>(rank) / static_cast<double>(population);
    study.fits = std::move(fits);
    return study;
}

inline PlaceboStudy placebo_in_space(const PanelDataset& panel,
                                     const StudySpec& spec,
                                     std::optional<double> cutoff_multiple,
                                     const FitOptions& options = {},
                                     bool rank_within_cutoff = false) {
    return assemble_placebo_study(placebo_unit_fits(panel, spec, options), spec,
                                  cutoff_multiple, rank_within_cutoff);
}

// ---------------------------------------------------------------------------
// In-time placebo
// ---------------------------------------------------------------------------

/// Divergence readout for the shifted-treatment refit. The ratio compares the
/// placebo post window (between shifted and true treatment) to the shifted
/// pre window; the divergence week is the first of 3 consecutive weeks with
/// |gap| > 2x pre-window RMSPE.
struct DivergenceVerdict {
    double ratio = 0.0;
    double pass_threshold = 2.0;
    bool pass = false;
    std::optional<Date> first_divergence_week;
    Date shifted_treatment_week{};
    Date true_treatment_week{};
};

inline std::pair<FitResult, DivergenceVerdict> placebo_in_time(
    const PanelDataset& panel, const StudySpec& spec, std::size_t shift_weeks,
    const FitOptions& options = {}, double pass_threshold = 2.0) {
    if (shift_weeks == 0) throw UsageError("in-time shift must be positive");
    const std::size_t remaining_pre =
        spec.treatment_week >= shift_weeks + spec.pre_window.first
            ? spec.treatment_week - shift_weeks - spec.pre_window.first
            : 0;
    if (remaining_pre < 2) throw InsufficientPreWindowError(remaining_pre);

    StudySpec shifted = spec;
    shifted.treatment_week = spec.treatment_week - shift_weeks;
    shifted.pre_window = {spec.pre_window.first, shifted.treatment_week - 1};
    shifted.post_window = {shifted.treatment_week, spec.post_window.last};

    FitResult fit = fit_study(panel, shifted, options);

    DivergenceVerdict verdict;
    verdict.pass_threshold = pass_threshold;
    verdict.shifted_treatment_week = panel.week_index()[shifted.treatment_week];
    verdict.true_treatment_week = panel.week_index()[spec.treatment_week];

    // Placebo post window: the weeks between shifted T0 and the true T0.
    const WeekRange placebo_post{shifted.treatment_week, spec.treatment_week - 1};
    double pre_mspe = 0.0, placebo_post_mspe = 0.0;
    for (std::size_t t = shifted.pre_window.first; t <= shifted.pre_window.last; ++t)
        pre_mspe += fit.gap[t] * fit.gap[t];
    pre_mspe /= static_cast<double>(shifted.pre_window.length());
    for (std::size_t t = placebo_post.first; t <= placebo_post.last; ++t)
        placebo_post_mspe += fit.gap[t] * fit.gap[t];
    placebo_post_mspe /= static_cast<double>(placebo_post.length());

    verdict.ratio = pre_mspe > 0.0
                        ? placebo_post_mspe / pre_mspe
                        : placebo_post_mspe / std::numeric_limits<double>::epsilon();
    verdict.pass = verdict.ratio < pass_threshold;

    const double rmspe = std::sqrt(pre_mspe);
    const double band = 2.0 * rmspe;
    std::size_t run = 0;
    for (std::size_t t = shifted.treatment_week; t < panel.week_count(); ++t) {
        run = std::abs(fit.gap[t]) > band ? run + 1 : 0;
        if (run == 3) {
            verdict.first_divergence_week = panel.week_index()[t - 2];
            break;
        }
    }
    return {std::move(fit), verdict};
}

// ---------------------------------------------------------------------------
// Outcome-swap and unit-swap placebos
// ---------------------------------------------------------------------------

/// Refits with a different outcome variable; the predictor list is unchanged
/// except that the new outcome is removed from it when present. Swapping to
/// the current outcome is a no-op refit.
inline FitResult placebo_outcome_swap(const PanelDataset& panel,
                                      const StudySpec& spec,
                                      const std::string& new_outcome,
                                      const FitOptions& options = {}) {
    if (!panel.has_variable(new_outcome)) throw UnknownVariableError(new_outcome);
    StudySpec swapped = spec;
    swapped.outcome_variable = new_outcome;
    if (new_outcome != spec.outcome_variable) {
        auto& predictors = swapped.predictor_variables;
        predictors.erase(std::remove(predictors.begin(), predictors.end(), new_outcome),
                         predictors.end());
        if (predictors.empty())
            throw DataError("outcome swap to " + new_outcome +
                            " leaves no predictor variables");
    }
    return fit_study(panel, swapped, options);
}

/// Refits with a donor cast as the treated unit; the original treated unit
/// joins the donor pool.
inline FitResult swap_treated_unit(const PanelDataset& panel,
                                   const StudySpec& spec,
                                   const std::string& new_treated,
                                   const FitOptions& options = {}) {
    if (std::find(spec.donor_units.begin(), spec.donor_units.end(), new_treated) ==
        spec.donor_units.end())
        throw UnknownUnitError(new_treated);
    return fit_study(panel, placebo_spec_for_unit(spec, new_treated), options);
}

}  // namespace synthctl
