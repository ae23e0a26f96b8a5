#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthctl/date.hpp"
#include "synthctl/errors.hpp"
#include "synthctl/ingest.hpp"

namespace synthctl {

using json = nlohmann::json;

enum class VariableTransform { none, log, normalize_max };

inline VariableTransform parse_variable_transform(const std::string& s) {
    if (s == "none") return VariableTransform::none;
    if (s == "log") return VariableTransform::log;
    if (s == "normalize_max") return VariableTransform::normalize_max;
    throw UsageError("unknown transform: " + s + " (use none|log|normalize_max)");
}

inline std::string variable_transform_name(VariableTransform t) {
    switch (t) {
        case VariableTransform::none: return "none";
        case VariableTransform::log: return "log";
        default: return "normalize_max";
    }
}

/// Derived-variable name produced by a transform.
inline std::string transformed_variable_name(const std::string& variable,
                                             VariableTransform t) {
    switch (t) {
        case VariableTransform::none: return variable;
        case VariableTransform::log: return "log_" + variable;
        default: return variable + "_norm";
    }
}

struct OutcomeConfig {
    std::string name;                   // outcome variable in the panel
    bool wallet_value = false;          // derive from `source` prices
    std::string source;                 // wallet-value price variable
    std::optional<Date> baseline_week;  // default: first panel week

    bool operator==(const OutcomeConfig&) const = default;
};

struct TransformConfig {
    std::string variable;
    VariableTransform op = VariableTransform::none;

    bool operator==(const TransformConfig&) const = default;
};

struct DonorExclusion {
    std::string unit;
    std::string reason;

    bool operator==(const DonorExclusion&) const = default;
};

struct PlaceboConfig {
    std::size_t shift_weeks = 24;
    std::vector<double> cutoff_multiples{10.0, 100.0};
    double in_time_pass_threshold = 2.0;
    bool rank_within_cutoff = false;
    std::optional<std::string> outcome_swap;

    bool operator==(const PlaceboConfig&) const = default;
};

struct LooConfig {
    double weight_floor = 1e-3;
    double degradation_multiple = 4.0;

    bool operator==(const LooConfig&) const = default;
};

struct OptimizerConfig {
    int starts = 24;

    bool operator==(const OptimizerConfig&) const = default;
};

/// Declarative description of one study; drives every CLI command so that
/// two analyses are two configs over two panels, not two code paths.
struct StudyConfig {
    std::uint64_t seed = 20240420;
    std::string input_csv;
    Weekday week_anchor = Weekday::sunday;
    WeeklyAggregation weekly_aggregation = WeeklyAggregation::mean;
    double log_floor = 1e-9;
    OutcomeConfig outcome;
    std::vector<TransformConfig> transforms;
    std::vector<std::string> predictor_candidates;
    std::optional<double> screen_threshold;
    std::string treated_unit;
    std::vector<std::string> donor_units;
    std::vector<DonorExclusion> donor_exclusions;
    Date treatment_week{};
    std::optional<Date> pre_start;
    std::optional<Date> post_end;
    PlaceboConfig placebo;
    LooConfig loo;
    OptimizerConfig optimizer;

    bool operator==(const StudyConfig&) const = default;

    /// Donor pool with exclusions applied, order preserved.
    std::vector<std::string> effective_donors() const {
        std::vector<std::string> out;
        for (const auto& d : donor_units) {
            bool excluded = false;
            for (const auto& e : donor_exclusions)
                if (e.unit == d) excluded = true;
            if (!excluded) out.push_back(d);
        }
        return out;
    }
};

namespace detail {

inline void require_keys(const json& node, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    if (!node.is_object())
        throw UsageError("config section " + where + " must be an object");
    for (const auto& [key, value] : node.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) throw UsageError("unknown config key: " + where + key);
    }
}

inline const json& require_section(const json& node, const char* key) {
    if (!node.contains(key))
        throw UsageError(std::string("missing config key: ") + key);
    return node.at(key);
}

template <typename T>
T get_required(const json& node, const std::string& where, const char* key) {
    if (!node.contains(key))
        throw UsageError("missing config key: " + where + key);
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("config key has wrong type: " + where + key);
    }
}

template <typename T>
T get_or(const json& node, const std::string& where, const char* key, T fallback) {
    if (!node.contains(key) || node.at(key).is_null()) return fallback;
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("config key has wrong type: " + where + key);
    }
}

inline std::optional<Date> get_optional_date(const json& node, const std::string& where,
                                             const char* key) {
    if (!node.contains(key) || node.at(key).is_null()) return std::nullopt;
    if (!node.at(key).is_string())
        throw UsageError("config key has wrong type: " + where + key);
    auto date = Date::try_parse_iso(node.at(key).get<std::string>());
    if (!date)
        throw UsageError("config key is not an ISO date: " + where + key);
    return date;
}

}  // namespace detail

inline StudyConfig parse_config(const json& j) {
    using detail::get_or;
    using detail::get_optional_date;
    using detail::get_required;
    using detail::require_keys;

    require_keys(j, "", {"seed", "input_csv", "week_anchor", "weekly_aggregation",
                         "log_floor", "outcome", "transforms", "predictors",
                         "treated_unit", "donor_pool", "treatment_week",
                         "pre_start", "post_end", "placebo", "loo", "optimizer"});

    StudyConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "", "seed", cfg.seed);
    cfg.input_csv = get_required<std::string>(j, "", "input_csv");
    cfg.week_anchor = parse_weekday(get_or<std::string>(j, "", "week_anchor", "sunday"));
    cfg.weekly_aggregation = parse_weekly_aggregation(
        get_or<std::string>(j, "", "weekly_aggregation", "mean"));
    cfg.log_floor = get_or<double>(j, "", "log_floor", cfg.log_floor);
    if (!(cfg.log_floor > 0.0)) throw UsageError("log_floor must be positive");

    {
        const json& node = detail::require_section(j, "outcome");
        require_keys(node, "outcome.", {"name", "kind", "source", "baseline_week"});
        cfg.outcome.name = get_required<std::string>(node, "outcome.", "name");
        const auto kind = get_or<std::string>(node, "outcome.", "kind", "raw");
        if (kind == "raw") {
            cfg.outcome.wallet_value = false;
            if (node.contains("source") || node.contains("baseline_week"))
                throw UsageError("outcome.source/baseline_week apply only to kind=wallet_value");
        } else if (kind == "wallet_value") {
            cfg.outcome.wallet_value = true;
            cfg.outcome.source = get_required<std::string>(node, "outcome.", "source");
            cfg.outcome.baseline_week = get_optional_date(node, "outcome.", "baseline_week");
        } else {
            throw UsageError("outcome.kind must be raw or wallet_value");
        }
    }

    if (j.contains("transforms")) {
        const json& node = j.at("transforms");
        if (!node.is_object())
            throw UsageError("config section transforms must be an object");
        for (const auto& [variable, op] : node.items()) {
            if (!op.is_string())
                throw UsageError("config key has wrong type: transforms." + variable);
            cfg.transforms.push_back(
                {variable, parse_variable_transform(op.get<std::string>())});
        }
    }

    {
        const json& node = detail::require_section(j, "predictors");
        require_keys(node, "predictors.", {"candidates", "screen_threshold"});
        cfg.predictor_candidates =
            get_required<std::vector<std::string>>(node, "predictors.", "candidates");
        if (node.contains("screen_threshold") && !node.at("screen_threshold").is_null()) {
            cfg.screen_threshold = get_required<double>(node, "predictors.", "screen_threshold");
            if (!(*cfg.screen_threshold > 0.0 && *cfg.screen_threshold <= 1.0))
                throw UsageError("predictors.screen_threshold must lie in (0, 1]");
        }
    }

    cfg.treated_unit = get_required<std::string>(j, "", "treated_unit");

    {
        const json& node = detail::require_section(j, "donor_pool");
        require_keys(node, "donor_pool.", {"units", "exclude"});
        cfg.donor_units =
            get_required<std::vector<std::string>>(node, "donor_pool.", "units");
        if (node.contains("exclude")) {
            for (const auto& e : node.at("exclude")) {
                require_keys(e, "donor_pool.exclude[].", {"unit", "reason"});
                cfg.donor_exclusions.push_back(
                    {get_required<std::string>(e, "donor_pool.exclude[].", "unit"),
                     get_or<std::string>(e, "donor_pool.exclude[].", "reason", "")});
            }
        }
    }

    {
        if (!j.contains("treatment_week"))
            throw UsageError("missing config key: treatment_week");
        auto date = get_optional_date(j, "", "treatment_week");
        if (!date) throw UsageError("config key is not an ISO date: treatment_week");
        cfg.treatment_week = *date;
    }
    cfg.pre_start = get_optional_date(j, "", "pre_start");
    cfg.post_end = get_optional_date(j, "", "post_end");

    if (j.contains("placebo")) {
        const json& node = j.at("placebo");
        require_keys(node, "placebo.",
                     {"shift_weeks", "cutoff_multiples", "in_time_pass_threshold",
                      "rank_within_cutoff", "outcome_swap"});
        cfg.placebo.shift_weeks =
            get_or<std::size_t>(node, "placebo.", "shift_weeks", cfg.placebo.shift_weeks);
        cfg.placebo.cutoff_multiples = get_or<std::vector<double>>(
            node, "placebo.", "cutoff_multiples", cfg.placebo.cutoff_multiples);
        for (double c : cfg.placebo.cutoff_multiples)
            if (!(c > 0.0)) throw UsageError("placebo.cutoff_multiples must be positive");
        cfg.placebo.in_time_pass_threshold =
            get_or<double>(node, "placebo.", "in_time_pass_threshold",
                           cfg.placebo.in_time_pass_threshold);
        cfg.placebo.rank_within_cutoff = get_or<bool>(
            node, "placebo.", "rank_within_cutoff", cfg.placebo.rank_within_cutoff);
        if (node.contains("outcome_swap") && !node.at("outcome_swap").is_null())
            cfg.placebo.outcome_swap =
                get_required<std::string>(node, "placebo.", "outcome_swap");
    }

    if (j.contains("loo")) {
        const json& node = j.at("loo");
        require_keys(node, "loo.", {"weight_floor", "degradation_multiple"});
        cfg.loo.weight_floor =
            get_or<double>(node, "loo.", "weight_floor", cfg.loo.weight_floor);
        cfg.loo.degradation_multiple = get_or<double>(
            node, "loo.", "degradation_multiple", cfg.loo.degradation_multiple);
        if (!(cfg.loo.weight_floor >= 0.0 && cfg.loo.weight_floor < 1.0))
            throw UsageError("loo.weight_floor must lie in [0, 1)");
        if (!(cfg.loo.degradation_multiple > 0.0))
            throw UsageError("loo.degradation_multiple must be positive");
    }

    if (j.contains("optimizer")) {
        const json& node = j.at("optimizer");
        require_keys(node, "optimizer.", {"starts"});
        cfg.optimizer.starts =
            get_or<int>(node, "optimizer.", "starts", cfg.optimizer.starts);
        if (cfg.optimizer.starts < 1)
            throw UsageError("optimizer.starts must be at least 1");
    }

    if (cfg.donor_units.size() < 2)
        throw UsageError("donor_pool.units needs at least 2 entries");
    if (cfg.predictor_candidates.empty())
        throw UsageError("predictors.candidates must not be empty");
    return cfg;
}

inline StudyConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

/// Fully-normalized serialization; parse(to_json(cfg)) == cfg.
inline json to_json(const StudyConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["input_csv"] = cfg.input_csv;
    j["week_anchor"] = weekday_name(cfg.week_anchor);
    j["weekly_aggregation"] = weekly_aggregation_name(cfg.weekly_aggregation);
    j["log_floor"] = cfg.log_floor;

    json outcome;
    outcome["name"] = cfg.outcome.name;
    outcome["kind"] = cfg.outcome.wallet_value ? "wallet_value" : "raw";
    if (cfg.outcome.wallet_value) {
        outcome["source"] = cfg.outcome.source;
        if (cfg.outcome.baseline_week)
            outcome["baseline_week"] = cfg.outcome.baseline_week->to_iso();
    }
    j["outcome"] = std::move(outcome);

    json transforms = json::object();
    for (const auto& t : cfg.transforms)
        transforms[t.variable] = variable_transform_name(t.op);
    j["transforms"] = std::move(transforms);

    json predictors;
    predictors["candidates"] = cfg.predictor_candidates;
    if (cfg.screen_threshold) predictors["screen_threshold"] = *cfg.screen_threshold;
    j["predictors"] = std::move(predictors);

    j["treated_unit"] = cfg.treated_unit;
    json donor_pool;
    donor_pool["units"] = cfg.donor_units;
    json exclude = json::array();
    for (const auto& e : cfg.donor_exclusions)
        exclude.push_back({{"unit", e.unit}, {"reason", e.reason}});
    donor_pool["exclude"] = std::move(exclude);
    j["donor_pool"] = std::move(donor_pool);

    j["treatment_week"] = cfg.treatment_week.to_iso();
    if (cfg.pre_start) j["pre_start"] = cfg.pre_start->to_iso();
    if (cfg.post_end) j["post_end"] = cfg.post_end->to_iso();

    j["placebo"] = {{"shift_weeks", cfg.placebo.shift_weeks},
                    {"cutoff_multiples", cfg.placebo.cutoff_multiples},
                    {"in_time_pass_threshold", cfg.placebo.in_time_pass_threshold},
                    {"rank_within_cutoff", cfg.placebo.rank_within_cutoff}};
    if (cfg.placebo.outcome_swap)
        j["placebo"]["outcome_swap"] = *cfg.placebo.outcome_swap;

    j["loo"] = {{"weight_floor", cfg.loo.weight_floor},
                {"degradation_multiple", cfg.loo.degradation_multiple}};
    j["optimizer"] = {{"starts", cfg.optimizer.starts}};
    return j;
}

}  // namespace synthctl
