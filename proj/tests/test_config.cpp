#include <catch2/catch_amalgamated.hpp>

#include "synthctl/config.hpp"

using namespace synthctl;

namespace {

const char* kFullConfig = R"({
  "seed": 7,
  "input_csv": "data/long.csv",
  "week_anchor": "sunday",
  "weekly_aggregation": "mean",
  "log_floor": 1e-9,
  "outcome": {
    "name": "wallet_value",
    "kind": "wallet_value",
    "source": "price",
    "baseline_week": "2023-04-02"
  },
  "transforms": {
    "num_transactions": "log",
    "total_addresses": "normalize_max"
  },
  "predictors": {
    "candidates": ["active_addresses_ratio", "log_num_transactions"],
    "screen_threshold": 0.7
  },
  "treated_unit": "BTC",
  "donor_pool": {
    "units": ["ADA", "TRX", "ETH", "KCS"],
    "exclude": [{"unit": "ETH", "reason": "idiosyncratic shocks over the study window"}]
  },
  "treatment_week": "2024-04-21",
  "pre_start": "2023-04-02",
  "post_end": "2024-07-21",
  "placebo": {
    "shift_weeks": 24,
    "cutoff_multiples": [10, 100],
    "in_time_pass_threshold": 2.0,
    "rank_within_cutoff": false,
    "outcome_swap": "log_num_transactions"
  },
  "loo": {"weight_floor": 0.001, "degradation_multiple": 4.0},
  "optimizer": {"starts": 24}
})";

}  // namespace

TEST_CASE("full config parses") {
    auto cfg = parse_config_text(kFullConfig);
    CHECK(cfg.seed == 7);
    CHECK(cfg.outcome.wallet_value);
    CHECK(cfg.outcome.source == "price");
    CHECK(cfg.outcome.baseline_week->to_iso() == "2023-04-02");
    CHECK(cfg.transforms.size() == 2);
    CHECK(cfg.predictor_candidates.size() == 2);
    CHECK(cfg.screen_threshold == 0.7);
    CHECK(cfg.donor_units.size() == 4);
    CHECK(cfg.effective_donors() == std::vector<std::string>{"ADA", "TRX", "KCS"});
    CHECK(cfg.treatment_week.to_iso() == "2024-04-21");
    CHECK(cfg.placebo.shift_weeks == 24);
    CHECK(cfg.placebo.cutoff_multiples == std::vector<double>{10.0, 100.0});
    CHECK(cfg.placebo.outcome_swap == "log_num_transactions");
    CHECK(cfg.loo.weight_floor == 0.001);
    CHECK(cfg.optimizer.starts == 24);
}

TEST_CASE("config round-trips losslessly through serialization") {
    auto cfg = parse_config_text(kFullConfig);
    auto reparsed = parse_config(to_json(cfg));
    CHECK(reparsed == cfg);
    // Document level: serialize -> parse -> serialize is a fixed point.
    CHECK(to_json(reparsed) == to_json(cfg));
}

TEST_CASE("minimal config gets defaults") {
    auto cfg = parse_config_text(R"({
      "input_csv": "x.csv",
      "outcome": {"name": "outcome", "kind": "raw"},
      "predictors": {"candidates": ["p"]},
      "treated_unit": "A",
      "donor_pool": {"units": ["B", "C"]},
      "treatment_week": "2023-06-04"
    })");
    CHECK(cfg.week_anchor == Weekday::sunday);
    CHECK(cfg.weekly_aggregation == WeeklyAggregation::mean);
    CHECK_FALSE(cfg.screen_threshold.has_value());
    CHECK(cfg.placebo.cutoff_multiples == std::vector<double>{10.0, 100.0});
    CHECK(cfg.loo.degradation_multiple == 4.0);

    auto reparsed = parse_config(to_json(cfg));
    CHECK(reparsed == cfg);
}

TEST_CASE("unknown keys are errors") {
    CHECK_THROWS_AS(parse_config_text(R"({
      "input_csv": "x.csv",
      "outcome": {"name": "outcome", "kind": "raw"},
      "predictors": {"candidates": ["p"]},
      "treated_unit": "A",
      "donor_pool": {"units": ["B", "C"]},
      "treatment_week": "2023-06-04",
      "surprise": 1
    })"),
                    UsageError);

    CHECK_THROWS_AS(parse_config_text(R"({
      "input_csv": "x.csv",
      "outcome": {"name": "outcome", "kind": "raw", "typo_key": 1},
      "predictors": {"candidates": ["p"]},
      "treated_unit": "A",
      "donor_pool": {"units": ["B", "C"]},
      "treatment_week": "2023-06-04"
    })"),
                    UsageError);
}

TEST_CASE("missing and malformed keys are rejected") {
    CHECK_THROWS_AS(parse_config_text(R"({"input_csv": "x.csv"})"), UsageError);
    CHECK_THROWS_AS(parse_config_text("not json at all"), UsageError);
    // wallet_value outcome requires a source
    CHECK_THROWS_AS(parse_config_text(R"({
      "input_csv": "x.csv",
      "outcome": {"name": "wallet", "kind": "wallet_value"},
      "predictors": {"candidates": ["p"]},
      "treated_unit": "A",
      "donor_pool": {"units": ["B", "C"]},
      "treatment_week": "2023-06-04"
    })"),
                    UsageError);
    // raw outcome must not carry wallet-value fields
    CHECK_THROWS_AS(parse_config_text(R"({
      "input_csv": "x.csv",
      "outcome": {"name": "outcome", "kind": "raw", "source": "price"},
      "predictors": {"candidates": ["p"]},
      "treated_unit": "A",
      "donor_pool": {"units": ["B", "C"]},
      "treatment_week": "2023-06-04"
    })"),
                    UsageError);
    // bad screening threshold
    CHECK_THROWS_AS(parse_config_text(R"({
      "input_csv": "x.csv",
      "outcome": {"name": "outcome", "kind": "raw"},
      "predictors": {"candidates": ["p"], "screen_threshold": 2.0},
      "treated_unit": "A",
      "donor_pool": {"units": ["B", "C"]},
      "treatment_week": "2023-06-04"
    })"),
                    UsageError);
    // bad date
    CHECK_THROWS_AS(parse_config_text(R"({
      "input_csv": "x.csv",
      "outcome": {"name": "outcome", "kind": "raw"},
      "predictors": {"candidates": ["p"]},
      "treated_unit": "A",
      "donor_pool": {"units": ["B", "C"]},
      "treatment_week": "someday"
    })"),
                    UsageError);
}
