#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "synthctl/rng.hpp"
#include "synthctl/scm.hpp"

namespace synthctl {

struct LooOptions {
    double weight_floor = 1e-3;        // "non-zero weight" threshold for refits
    double degradation_multiple = 4.0; // pre-MSPE factor flagging a worse pre-fit
    FitOptions fit{};
};

struct LooEntry {
    std::string excluded_donor;
    double baseline_weight = 0.0;
    bool ok = false;
    FitResult fit;  // valid iff ok
    double average_post_gap = 0.0;
    bool sign_flipped = false;
    bool pre_fit_degraded = false;
    std::string error;  // set iff !ok
};

/// Leave-one-out robustness report: one refit per donor that carried weight
/// in the baseline fit, plus the mechanical robustness verdict.
struct LooReport {
    double baseline_average_gap = 0.0;
    double baseline_pre_mspe = 0.0;
    std::vector<LooEntry> entries;
    bool robust = true;  // false when any entry flips sign or degrades pre-fit
};

/// Refits the study once per donor whose baseline weight exceeds the floor,
/// each time with that donor removed from the pool. Sign flips and degraded
/// pre-fits (pre-MSPE beyond `degradation_multiple` x baseline) mark the
/// study as not robust. Per-refit optimizer failures are flagged entries.
inline LooReport leave_one_out(const PanelDataset& panel, const StudySpec& spec,
                               const FitResult& baseline,
                               const LooOptions& options = {}) {
    if (!(options.weight_floor >= 0.0 && options.weight_floor < 1.0))
        throw UsageError("LOO weight floor must lie in [0, 1)");

    LooReport report;
    report.baseline_average_gap = baseline.average_post_gap;
    report.baseline_pre_mspe = baseline.pre_mspe;

    const double baseline_sign = report.baseline_average_gap >= 0.0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < spec.donor_units.size(); ++j) {
        const double weight = baseline.donor_weights.weights[j];
        if (!(weight > options.weight_floor)) continue;

        LooEntry entry;
        entry.excluded_donor = spec.donor_units[j];
        entry.baseline_weight = weight;

        StudySpec reduced = spec;
        reduced.donor_units.clear();
        for (const auto& d : spec.donor_units)
            if (d != entry.excluded_donor) reduced.donor_units.push_back(d);

        FitOptions refit_options = options.fit;
        refit_options.seed = derive_seed(options.fit.seed, j + 1);
        try {
            entry.fit = fit_study(panel, reduced, refit_options);
            entry.ok = true;
            entry.average_post_gap = entry.fit.average_post_gap;
            const double sign = entry.average_post_gap >= 0.0 ? 1.0 : -1.0;
            entry.sign_flipped = sign != baseline_sign;
            entry.pre_fit_degraded =
                entry.fit.pre_mspe >
                options.degradation_multiple * report.baseline_pre_mspe;
            if (entry.sign_flipped || entry.pre_fit_degraded) report.robust = false;
        } catch (const OptimizerFailure& failure) {
            entry.error = failure.what();
            report.robust = false;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace synthctl
