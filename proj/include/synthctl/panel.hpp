#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "synthctl/date.hpp"
#include "synthctl/errors.hpp"

namespace synthctl {

/// Unvalidated panel material as assembled by an ingester. Missing cells are
/// NaN; validate_panel turns a draft into an immutable PanelDataset.
struct PanelDraft {
    std::vector<std::string> unit_ids;
    std::vector<Date> week_index;
    std::vector<std::string> variables;
    /// Dense, addressed by (variable, unit, week); week varies fastest.
    std::vector<double> values;
};

/// Rectangular unit x week x variable panel. Immutable once constructed;
/// the single source of truth every fit consumes. Safe to share across
/// concurrent readers.
class PanelDataset {
public:
    const std::vector<std::string>& unit_ids() const { return units_; }
    const std::vector<Date>& week_index() const { return weeks_; }
    const std::vector<std::string>& variables() const { return variables_; }

    std::size_t unit_count() const { return units_.size(); }
    std::size_t week_count() const { return weeks_.size(); }
    std::size_t variable_count() const { return variables_.size(); }

    double value(std::size_t variable, std::size_t unit, std::size_t week) const {
        return values_[offset(variable, unit, week)];
    }

    /// Full-horizon series for one (variable, unit); contiguous view.
    std::span<const double> series(std::size_t variable, std::size_t unit) const {
        return {values_.data() + offset(variable, unit, 0), weeks_.size()};
    }

    std::span<const double> series(const std::string& variable,
                                   const std::string& unit) const {
        return series(variable_index(variable), unit_index(unit));
    }

    std::size_t unit_index(const std::string& id) const {
        auto it = unit_lookup_.find(id);
        if (it == unit_lookup_.end()) throw UnknownUnitError(id);
        return it->second;
    }

    std::size_t variable_index(const std::string& name) const {
        auto it = variable_lookup_.find(name);
        if (it == variable_lookup_.end()) throw UnknownVariableError(name);
        return it->second;
    }

    bool has_unit(const std::string& id) const {
        return unit_lookup_.count(id) > 0;
    }

    bool has_variable(const std::string& name) const {
        return variable_lookup_.count(name) > 0;
    }

    std::optional<std::size_t> week_index_of(Date week) const {
        auto it = std::lower_bound(weeks_.begin(), weeks_.end(), week);
        if (it == weeks_.end() || *it != week) return std::nullopt;
        return static_cast<std::size_t>(it - weeks_.begin());
    }

    /// New panel with one more variable; `values` is (unit, week) dense with
    /// week varying fastest.
    PanelDataset with_variable(const std::string& name,
                               const std::vector<double>& values) const {
        if (has_variable(name)) throw DuplicateVariableError(name);
        if (values.size() != units_.size() * weeks_.size())
            throw LengthMismatchError(values.size(), units_.size() * weeks_.size());
        for (double v : values)
            if (!std::isfinite(v))
                throw DataError("derived variable " + name + " has non-finite values");
        PanelDataset out(*this);
        out.variables_.push_back(name);
        out.variable_lookup_.emplace(name, out.variables_.size() - 1);
        out.values_.insert(out.values_.end(), values.begin(), values.end());
        return out;
    }

    PanelDraft draft() const {
        return PanelDraft{units_, weeks_, variables_, values_};
    }

    friend PanelDataset validate_panel(const PanelDraft& raw);

private:
    PanelDataset() = default;

    std::size_t offset(std::size_t variable, std::size_t unit,
                       std::size_t week) const {
        return (variable * units_.size() + unit) * weeks_.size() + week;
    }

    std::vector<std::string> units_;
    std::vector<Date> weeks_;
    std::vector<std::string> variables_;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> unit_lookup_;
    std::unordered_map<std::string, std::size_t> variable_lookup_;
};

/// Checks every panel invariant and returns the immutable dataset.
/// Errors identify the first offending coordinate in storage order.
inline PanelDataset validate_panel(const PanelDraft& raw) {
    if (raw.unit_ids.empty()) throw DataError("panel has no units");
    if (raw.week_index.empty()) throw DataError("panel has no weeks");
    if (raw.variables.empty()) throw DataError("panel has no variables");

    {
        std::unordered_set<std::string> seen;
        for (const auto& u : raw.unit_ids) {
            if (u.empty()) throw DataError("empty unit id");
            if (!seen.insert(u).second) throw DuplicateUnitError(u);
        }
    }
    {
        std::unordered_set<std::string> seen;
        for (const auto& v : raw.variables) {
            if (v.empty()) throw DataError("empty variable name");
            if (!seen.insert(v).second) throw DuplicateVariableError(v);
        }
    }
    for (std::size_t w = 1; w < raw.week_index.size(); ++w) {
        auto gap = raw.week_index[w] - raw.week_index[w - 1];
        if (gap != 7)
            throw IrregularWeekSpacingError(raw.week_index[w].to_iso(),
                                            static_cast<long>(gap));
    }

    const std::size_t expected =
        raw.variables.size() * raw.unit_ids.size() * raw.week_index.size();
    if (raw.values.size() != expected)
        throw LengthMismatchError(raw.values.size(), expected);

    for (std::size_t v = 0; v < raw.variables.size(); ++v)
        for (std::size_t u = 0; u < raw.unit_ids.size(); ++u)
            for (std::size_t w = 0; w < raw.week_index.size(); ++w) {
                double x = raw.values[(v * raw.unit_ids.size() + u) *
                                          raw.week_index.size() +
                                      w];
                if (!std::isfinite(x))
                    throw MissingValueError(raw.variables[v], raw.unit_ids[u],
                                            raw.week_index[w].to_iso());
            }

    PanelDataset panel;
    panel.units_ = raw.unit_ids;
    panel.weeks_ = raw.week_index;
    panel.variables_ = raw.variables;
    panel.values_ = raw.values;
    for (std::size_t i = 0; i < panel.units_.size(); ++i)
        panel.unit_lookup_.emplace(panel.units_[i], i);
    for (std::size_t i = 0; i < panel.variables_.size(); ++i)
        panel.variable_lookup_.emplace(panel.variables_[i], i);
    return panel;
}

/// Inclusive range of week indices.
struct WeekRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t length() const { return last - first + 1; }
    bool contains(std::size_t w) const { return w >= first && w <= last; }
    bool operator==(const WeekRange&) const = default;
};

/// Declarative description of one study: who is treated, who donates,
/// when treatment starts, and which variables drive the fit.
struct StudySpec {
    std::string treated_unit;
    std::vector<std::string> donor_units;
    std::size_t treatment_week = 0;  // index into week_index; first treated week
    std::string outcome_variable;
    std::vector<std::string> predictor_variables;
    WeekRange pre_window;   // ends the week before treatment_week
    WeekRange post_window;  // starts at treatment_week

    bool operator==(const StudySpec&) const = default;
};

/// Returns the spec iff all referenced units/variables/weeks exist and the
/// window invariants hold. Fit-quality warnings (not errors) are appended to
/// `warnings` when provided.
inline StudySpec validate_spec(const StudySpec& spec, const PanelDataset& panel,
                               std::vector<std::string>* warnings = nullptr) {
    if (!panel.has_unit(spec.treated_unit))
        throw UnknownUnitError(spec.treated_unit);
    if (spec.donor_units.size() < 2)
        throw DataError("donor pool needs at least 2 units, got " +
                        std::to_string(spec.donor_units.size()));
    {
        std::unordered_set<std::string> seen;
        for (const auto& d : spec.donor_units) {
            if (d == spec.treated_unit) throw TreatedInDonorPoolError(d);
            if (!panel.has_unit(d)) throw UnknownUnitError(d);
            if (!seen.insert(d).second) throw DuplicateUnitError(d);
        }
    }
    if (!panel.has_variable(spec.outcome_variable))
        throw UnknownVariableError(spec.outcome_variable);
    if (spec.predictor_variables.empty())
        throw DataError("study needs at least one predictor variable");
    {
        std::unordered_set<std::string> seen;
        for (const auto& p : spec.predictor_variables) {
            if (!panel.has_variable(p)) throw UnknownVariableError(p);
            if (!seen.insert(p).second) throw DuplicateVariableError(p);
        }
    }

    const std::size_t n_weeks = panel.week_count();
    if (spec.treatment_week >= n_weeks)
        throw DataError("treatment week index " +
                        std::to_string(spec.treatment_week) +
                        " is outside the panel");
    if (spec.pre_window.first > spec.pre_window.last ||
        spec.post_window.first > spec.post_window.last)
        throw DataError("study windows are not ordered");
    if (spec.pre_window.last + 1 != spec.treatment_week)
        throw DataError("pre-treatment window must end the week before treatment");
    if (spec.post_window.first != spec.treatment_week)
        throw DataError("post-treatment window must start at the treatment week");
    if (spec.post_window.last >= n_weeks)
        throw DataError("post-treatment window extends past the panel");
    if (spec.pre_window.length() < 2)
        throw InsufficientPreWindowError(spec.pre_window.length());
    if (warnings && spec.pre_window.length() < 8)
        warnings->push_back("pre-treatment window has only " +
                            std::to_string(spec.pre_window.length()) +
                            " weeks; 8 or more are recommended for fit quality");
    return spec;
}

/// Convex donor weights; the synthetic unit is this mixture of donors.
struct DonorWeights {
    std::vector<std::string> units;  // donor order from the StudySpec
    std::vector<double> weights;

    double at(const std::string& unit) const {
        for (std::size_t i = 0; i < units.size(); ++i)
            if (units[i] == unit) return weights[i];
        throw UnknownUnitError(unit);
    }
};

/// Convex predictor (importance) weights used inside the nested fit.
struct PredictorWeights {
    std::vector<std::string> predictors;
    std::vector<double> weights;

    double at(const std::string& predictor) const {
        for (std::size_t i = 0; i < predictors.size(); ++i)
            if (predictors[i] == predictor) return weights[i];
        throw UnknownVariableError(predictor);
    }
};

inline bool on_simplex(std::span<const double> w, double tol = 1e-9) {
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= -tol && x <= 1.0 + tol)) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= tol;
}

}  // namespace synthctl
