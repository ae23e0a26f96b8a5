#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "synthctl/csv.hpp"
#include "synthctl/errors.hpp"
#include "synthctl/panel.hpp"

namespace synthctl {

/// Value of a 100-unit investment made at `baseline_week`, tracked over the
/// series: out[w] = (100 / prices[baseline_week]) * prices[w]. The baseline
/// week is exactly 100 for every unit, which makes heterogeneous price levels
/// comparable.
inline std::vector<double> wallet_value(std::span<const double> prices,
                                        std::size_t baseline_week) {
    if (baseline_week >= prices.size())
        throw DataError("baseline week index " + std::to_string(baseline_week) +
                        " outside series of length " +
                        std::to_string(prices.size()));
    const double baseline = prices[baseline_week];
    if (!(baseline > 0.0))
        throw NonPositiveBaselinePriceError("price " + format_double(baseline) +
                                            " at baseline week");
    const double initial_quantity = 100.0 / baseline;
    std::vector<double> out(prices.size());
    for (std::size_t w = 0; w < prices.size(); ++w)
        out[w] = initial_quantity * prices[w];
    out[baseline_week] = 100.0;  // exact by definition
    return out;
}

/// Scales a non-negative series by its maximum so the output lies in [0, 1]
/// and attains 1.
inline std::vector<double> normalize_max(std::span<const double> series) {
    if (series.empty()) throw DataError("cannot normalize an empty series");
    const double max = *std::max_element(series.begin(), series.end());
    if (!(max > 0.0)) throw NonPositiveMaximumError();
    std::vector<double> out(series.size());
    for (std::size_t w = 0; w < series.size(); ++w) out[w] = series[w] / max;
    return out;
}

/// Natural log with a positive floor guarding zeros: out[w] = ln(max(x, floor)).
inline std::vector<double> log_transform(std::span<const double> series,
                                         double floor = 1e-9) {
    if (!(floor > 0.0)) throw DataError("log floor must be positive");
    std::vector<double> out(series.size());
    for (std::size_t w = 0; w < series.size(); ++w)
        out[w] = std::log(std::max(series[w], floor));
    return out;
}

/// Sample Pearson correlation; returns 0 and sets *defined=false when either
/// series has zero variance.
inline double pearson(std::span<const double> x, std::span<const double> y,
                      bool* defined = nullptr) {
    if (x.size() != y.size()) throw LengthMismatchError(x.size(), y.size());
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        if (defined) *defined = false;
        return 0.0;
    }
    if (defined) *defined = true;
    return sxy / std::sqrt(sxx * syy);
}

struct ExcludedPredictor {
    std::string name;
    std::string conflicts_with;  // already-kept candidate it correlates with
    double correlation = 0.0;
};

struct ScreeningResult {
    std::vector<std::string> kept;
    std::vector<ExcludedPredictor> excluded;
    std::vector<std::string> dropped_constant;  // zero variance, with warning
};

/// Greedy forward pass over `candidates` in the given order, computed on the
/// treated unit's pre-window series: a candidate is kept iff |Pearson r| with
/// every already-kept candidate is <= threshold. Constant series are dropped.
inline ScreeningResult screen_predictors(const PanelDataset& panel,
                                         const std::vector<std::string>& candidates,
                                         double threshold,
                                         const std::string& treated,
                                         WeekRange pre_window) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw UsageError("screening threshold must lie in (0, 1]");
    const std::size_t unit = panel.unit_index(treated);
    if (pre_window.last >= panel.week_count())
        throw DataError("pre-window extends past the panel");

    auto pre_series = [&](const std::string& var) {
        auto full = panel.series(panel.variable_index(var), unit);
        return std::vector<double>(full.begin() + static_cast<std::ptrdiff_t>(pre_window.first),
                                   full.begin() + static_cast<std::ptrdiff_t>(pre_window.last) + 1);
    };

    ScreeningResult result;
    std::vector<std::vector<double>> kept_series;
    for (const auto& name : candidates) {
        auto series = pre_series(name);
        bool defined = false;
        pearson(series, series, &defined);  // variance probe
        if (!defined) {
            result.dropped_constant.push_back(name);
            continue;
        }
        bool keep = true;
        for (std::size_t k = 0; k < result.kept.size(); ++k) {
            double r = pearson(series, kept_series[k]);
            if (std::abs(r) > threshold) {
                result.excluded.push_back({name, result.kept[k], r});
                keep = false;
                break;
            }
        }
        if (keep) {
            result.kept.push_back(name);
            kept_series.push_back(std::move(series));
        }
    }
    return result;
}

}  // namespace synthctl
