#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "synthctl/date.hpp"
#include "synthctl/errors.hpp"
#include "synthctl/ingest.hpp"
#include "synthctl/rng.hpp"

namespace synthctl {

/// Parameters for the seeded linear-factor-model fixture generator.
struct SynthGenParams {
    int units = 8;           // first unit is treated
    int weeks = 60;
    int factors = 3;         // common factors; also the predictor count
    double effect = 0.0;     // additive outcome shift on the treated unit from T0
    double noise_sd_fraction = 0.02;  // idiosyncratic noise as share of base level
    std::uint64_t seed = 1;
    int treatment_week = -1;          // panel index; -1 places it at 3/4 horizon
    Date anchor_week = Date::parse_iso("2023-04-02");
    double base_level = 100.0;
};

struct SynthGenTruth {
    std::string treated_unit;
    Date treatment_week{};
    std::size_t treatment_week_index = 0;
    double effect = 0.0;
    double noise_sd = 0.0;
    int predictor_count = 0;
    /// Convex mixture of donors the treated unit's loadings were built from.
    std::vector<std::pair<std::string, double>> treated_mixture;
};

struct SynthGenOutput {
    std::vector<LongObservation> observations;  // weekly rows, panel-complete
    SynthGenTruth truth;
};

/// Generates a weekly long-format panel from a linear factor model: common
/// factors with unit loadings, idiosyncratic noise, and an additive treatment
/// effect injected into the first unit from the treatment week onward. The
/// treated unit's loadings are a convex combination of donor loadings, so a
/// synthetic control with the true mixture reproduces it up to noise.
///
/// The outcome loads on the first `factors` components. The panel carries
/// max(factors, units - 2) predictor variables (`pred1`, `pred2`, ...), one
/// per loading component: with fewer than J-1 predictors the donor-weight
/// problem is under-determined and no method could pin the true mixture.
inline SynthGenOutput generate_factor_panel(const SynthGenParams& params) {
    if (params.units < 3) throw UsageError("synthgen needs at least 3 units");
    if (params.weeks < 10) throw UsageError("synthgen needs at least 10 weeks");
    if (params.factors < 1) throw UsageError("synthgen needs at least 1 factor");
    if (params.noise_sd_fraction < 0.0)
        throw UsageError("synthgen noise fraction must be non-negative");
    if (!(params.base_level > 0.0))
        throw UsageError("synthgen base level must be positive");

    const int n_units = params.units;
    const int n_weeks = params.weeks;
    const int n_factors = params.factors;
    const int n_loadings = std::max(n_factors, n_units - 2);
    int t0 = params.treatment_week >= 0 ? params.treatment_week
                                        : (3 * n_weeks) / 4;
    if (t0 < 2 || t0 >= n_weeks)
        throw UsageError("treatment week must leave at least 2 pre weeks and 1 post week");

    Rng rng(params.seed);

    auto unit_name = [](int j) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "U%02d", j + 1);
        return std::string(buf);
    };

    // Common factor paths, one per loading component: random walks with unit
    // steps. The outcome loads on the first n_factors of them.
    std::vector<std::vector<double>> factor_paths(
        static_cast<std::size_t>(n_loadings),
        std::vector<double>(static_cast<std::size_t>(n_weeks), 0.0));
    for (auto& path : factor_paths) {
        double level = 0.0;
        for (auto& x : path) {
            level += rng.normal();
            x = level;
        }
    }

    // Donor loadings uniform in [0.5, 1.5]; treated loadings are a convex
    // mixture of the first few donors.
    std::vector<std::vector<double>> loadings(
        static_cast<std::size_t>(n_units),
        std::vector<double>(static_cast<std::size_t>(n_loadings), 0.0));
    for (int j = 1; j < n_units; ++j)
        for (int p = 0; p < n_loadings; ++p)
            loadings[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)] =
                rng.uniform(0.5, 1.5);

    const std::size_t mixture_size =
        std::min<std::size_t>(3, static_cast<std::size_t>(n_units - 1));
    const std::vector<double> mixture = rng.dirichlet(mixture_size);
    for (int p = 0; p < n_loadings; ++p) {
        double value = 0.0;
        for (std::size_t d = 0; d < mixture_size; ++d)
            value += mixture[d] * loadings[d + 1][static_cast<std::size_t>(p)];
        loadings[0][static_cast<std::size_t>(p)] = value;
    }

    const double amplitude = params.base_level * 0.04;
    const double noise_sd = params.noise_sd_fraction * params.base_level;

    SynthGenOutput out;
    out.truth.treated_unit = unit_name(0);
    out.truth.treatment_week = params.anchor_week + 7 * t0;
    out.truth.treatment_week_index = static_cast<std::size_t>(t0);
    out.truth.effect = params.effect;
    out.truth.noise_sd = noise_sd;
    out.truth.predictor_count = n_loadings;
    for (std::size_t d = 0; d < mixture_size; ++d)
        out.truth.treated_mixture.emplace_back(unit_name(static_cast<int>(d) + 1),
                                               mixture[d]);

    // Emission order (unit, week, variable) keeps the CSV layout stable.
    for (int j = 0; j < n_units; ++j) {
        const auto& load = loadings[static_cast<std::size_t>(j)];
        for (int t = 0; t < n_weeks; ++t) {
            const Date week = params.anchor_week + 7 * t;
            double common = 0.0;
            for (int p = 0; p < n_factors; ++p)
                common += load[static_cast<std::size_t>(p)] *
                          factor_paths[static_cast<std::size_t>(p)]
                                      [static_cast<std::size_t>(t)];
            double outcome = params.base_level + amplitude * common +
                             rng.normal(0.0, noise_sd);
            if (j == 0 && t >= t0) outcome += params.effect;
            out.observations.push_back({unit_name(j), week, "outcome", outcome});
            for (int p = 0; p < n_loadings; ++p) {
                const double pred =
                    load[static_cast<std::size_t>(p)] *
                        (1.0 +
                         0.05 * factor_paths[static_cast<std::size_t>(p)]
                                            [static_cast<std::size_t>(t)] /
                             std::sqrt(static_cast<double>(t + 1))) +
                    rng.normal(0.0, 0.01);
                out.observations.push_back(
                    {unit_name(j), week, "pred" + std::to_string(p + 1), pred});
            }
        }
    }
    return out;
}

/// Long CSV for the generated panel, byte-stable for a fixed seed.
inline void write_observations_csv(std::ostream& os,
                                   const std::vector<LongObservation>& observations) {
    write_csv_row(os, {"unit", "date", "variable", "value"});
    for (const auto& obs : observations)
        write_csv_row(os, {obs.unit, obs.date.to_iso(), obs.variable,
                           format_double(obs.value)});
}

}  // namespace synthctl
