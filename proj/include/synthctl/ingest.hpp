#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "synthctl/csv.hpp"
#include "synthctl/date.hpp"
#include "synthctl/errors.hpp"
#include "synthctl/panel.hpp"

namespace synthctl {

/// One raw observation from a long-format CSV.
struct LongObservation {
    std::string unit;
    Date date;
    std::string variable;
    double value = 0.0;
};

/// Parses a long CSV with header `unit,date,variable,value`.
/// Row order is preserved; errors carry the physical line.
inline std::vector<LongObservation> load_long_csv(std::istream& in) {
    auto records = read_csv(in);
    if (records.empty()) throw EmptyInputError();

    const auto& header = records.front().fields;
    const std::vector<std::string> expected{"unit", "date", "variable", "value"};
    if (header != expected)
        throw ParseError(records.front().line, 1,
                         "header must be exactly `unit,date,variable,value`");
    if (records.size() == 1) throw EmptyInputError();

    std::vector<LongObservation> out;
    out.reserve(records.size() - 1);
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.fields.size() != 4)
            throw ParseError(rec.line, 1,
                             "expected 4 fields, got " +
                                 std::to_string(rec.fields.size()));
        LongObservation obs;
        obs.unit = rec.fields[0];
        if (obs.unit.empty()) throw ParseError(rec.line, 1, "empty unit id");
        auto date = Date::try_parse_iso(rec.fields[1]);
        if (!date)
            throw ParseError(rec.line, 2,
                             "invalid ISO date: " + rec.fields[1]);
        obs.date = *date;
        obs.variable = rec.fields[2];
        if (obs.variable.empty())
            throw ParseError(rec.line, 3, "empty variable name");
        auto value = try_parse_double(rec.fields[3]);
        if (!value)
            throw ParseError(rec.line, 4,
                             "invalid numeric value: " + rec.fields[3]);
        obs.value = *value;
        out.push_back(std::move(obs));
    }
    return out;
}

enum class WeeklyAggregation {
    mean,  ///< arithmetic mean of the week's daily values
    last,  ///< value observed on the latest date within the week
};

inline WeeklyAggregation parse_weekly_aggregation(const std::string& s) {
    if (s == "mean") return WeeklyAggregation::mean;
    if (s == "last") return WeeklyAggregation::last;
    throw UsageError("unknown weekly aggregation: " + s + " (use mean|last)");
}

inline std::string weekly_aggregation_name(WeeklyAggregation a) {
    return a == WeeklyAggregation::mean ? "mean" : "last";
}

/// Buckets daily observations into weeks anchored at `week_anchor` and
/// aggregates each (unit, variable, week) bucket. The panel spans the full
/// week range of the input; a bucket with zero observations for any declared
/// (unit, variable) surfaces as MissingValue at validation.
inline PanelDataset to_weekly(const std::vector<LongObservation>& observations,
                              Weekday week_anchor,
                              WeeklyAggregation aggregation = WeeklyAggregation::mean) {
    if (observations.empty()) throw EmptyInputError();

    // First-appearance ordering keeps output deterministic for a given file.
    std::vector<std::string> units, variables;
    std::map<std::string, std::size_t> unit_idx, var_idx;
    Date min_week = week_start(observations.front().date, week_anchor);
    Date max_week = min_week;
    for (const auto& obs : observations) {
        if (unit_idx.emplace(obs.unit, units.size()).second)
            units.push_back(obs.unit);
        if (var_idx.emplace(obs.variable, variables.size()).second)
            variables.push_back(obs.variable);
        Date w = week_start(obs.date, week_anchor);
        min_week = std::min(min_week, w);
        max_week = std::max(max_week, w);
    }

    const std::size_t n_weeks =
        static_cast<std::size_t>((max_week - min_week) / 7) + 1;
    std::vector<Date> weeks;
    weeks.reserve(n_weeks);
    for (std::size_t w = 0; w < n_weeks; ++w)
        weeks.push_back(min_week + static_cast<std::int64_t>(7 * w));

    struct Bucket {
        double sum = 0.0;
        std::size_t count = 0;
        Date last_date{};
        double last_value = 0.0;
    };
    std::vector<Bucket> buckets(variables.size() * units.size() * n_weeks);
    auto at = [&](std::size_t v, std::size_t u, std::size_t w) -> Bucket& {
        return buckets[(v * units.size() + u) * n_weeks + w];
    };

    for (const auto& obs : observations) {
        std::size_t v = var_idx[obs.variable];
        std::size_t u = unit_idx[obs.unit];
        auto w = static_cast<std::size_t>(
            (week_start(obs.date, week_anchor) - min_week) / 7);
        Bucket& b = at(v, u, w);
        b.sum += obs.value;
        if (b.count == 0 || obs.date >= b.last_date) {
            b.last_date = obs.date;
            b.last_value = obs.value;
        }
        ++b.count;
    }

    PanelDraft draft;
    draft.unit_ids = units;
    draft.week_index = weeks;
    draft.variables = variables;
    draft.values.resize(buckets.size(),
                        std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        const Bucket& b = buckets[i];
        if (b.count == 0) continue;
        draft.values[i] = aggregation == WeeklyAggregation::mean
                              ? b.sum / static_cast<double>(b.count)
                              : b.last_value;
    }
    return validate_panel(draft);
}

/// Writes a panel back out in the same long format the ingester reads,
/// one row per (variable, unit, week) in storage order.
inline void write_panel_long_csv(std::ostream& out, const PanelDataset& panel) {
    write_csv_row(out, {"unit", "date", "variable", "value"});
    for (std::size_t v = 0; v < panel.variable_count(); ++v)
        for (std::size_t u = 0; u < panel.unit_count(); ++u)
            for (std::size_t w = 0; w < panel.week_count(); ++w)
                write_csv_row(out, {panel.unit_ids()[u],
                                    panel.week_index()[w].to_iso(),
                                    panel.variables()[v],
                                    format_double(panel.value(v, u, w))});
}

}  // namespace synthctl
