#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthctl/panel.hpp"
#include "synthctl/rng.hpp"
#include "synthctl/solver.hpp"

namespace synthctl {

/// Dense blocks the optimization consumes. Column j of x0/z0 corresponds to
/// donor_units[j] in StudySpec order. Predictor rows are raw (unstandardized);
/// fit_study standardizes a copy before optimizing.
struct ScmMatrices {
    Eigen::VectorXd x1;  // k x 1: treated pre-window predictor means
    Eigen::MatrixXd x0;  // k x J: donor pre-window predictor means
    Eigen::VectorXd z1;  // T_pre x 1: treated pre-window outcomes
    Eigen::MatrixXd z0;  // T_pre x J: donor pre-window outcomes
};

/// Pre-treatment predictor balance: treated vs synthetic vs unweighted donor
/// mean, plus how much the synthetic match improves on the naive donor mean.
struct BalanceRow {
    std::string predictor;
    double treated = 0.0;
    double synthetic = 0.0;
    double sample_mean = 0.0;
    double improvement = 0.0;  // |treated - sample_mean| - |treated - synthetic|
};

using BalanceTable = std::vector<BalanceRow>;

struct FitDiagnostics {
    bool degenerate = false;      // non-unique optimum encountered
    bool used_fallback = false;   // inner solver needed the projection fallback
    double predictor_objective = 0.0;  // weighted X-residual at the solution
    long outer_evaluations = 0;
    int starts = 0;
    std::uint64_t seed = 0;
};

/// Everything one SCM fit produces: weights, the full-horizon synthetic and
/// gap series, window diagnostics, and the predictor balance table.
struct FitResult {
    StudySpec spec;
    DonorWeights donor_weights;
    PredictorWeights predictor_weights;
    std::vector<double> treated_outcome;    // full horizon
    std::vector<double> synthetic_outcome;  // full horizon
    std::vector<double> gap;                // treated - synthetic
    double pre_mspe = 0.0;
    double post_mspe = 0.0;
    double average_post_gap = 0.0;
    BalanceTable balance;
    FitDiagnostics diagnostics;
};

struct FitOptions {
    std::uint64_t seed = 20240420;
    int starts = 24;                 // multi-start count for the outer V search
    NelderMeadOptions nelder_mead{};
    SimplexLsqOptions inner{};
    bool standardize_predictors = true;
};

// ---------------------------------------------------------------------------
// Matrix assembly
// ---------------------------------------------------------------------------

/// X entries are arithmetic means of each predictor over the pre-window;
/// Z entries are the raw outcome values per pre-window week.
inline ScmMatrices build_matrices(const PanelDataset& panel, const StudySpec& spec) {
    const auto k = static_cast<Eigen::Index>(spec.predictor_variables.size());
    const auto j_donors = static_cast<Eigen::Index>(spec.donor_units.size());
    const auto t_pre = static_cast<Eigen::Index>(spec.pre_window.length());

    const std::size_t treated = panel.unit_index(spec.treated_unit);
    std::vector<std::size_t> donors(spec.donor_units.size());
    for (std::size_t j = 0; j < spec.donor_units.size(); ++j)
        donors[j] = panel.unit_index(spec.donor_units[j]);

    auto pre_mean = [&](std::size_t variable, std::size_t unit) {
        auto full = panel.series(variable, unit);
        double sum = 0.0;
        for (std::size_t w = spec.pre_window.first; w <= spec.pre_window.last; ++w)
            sum += full[w];
        return sum / static_cast<double>(spec.pre_window.length());
    };

    ScmMatrices m;
    m.x1.resize(k);
    m.x0.resize(k, j_donors);
    for (Eigen::Index p = 0; p < k; ++p) {
        const std::size_t variable =
            panel.variable_index(spec.predictor_variables[static_cast<std::size_t>(p)]);
        m.x1(p) = pre_mean(variable, treated);
        for (Eigen::Index j = 0; j < j_donors; ++j)
            m.x0(p, j) = pre_mean(variable, donors[static_cast<std::size_t>(j)]);
    }

    const std::size_t outcome = panel.variable_index(spec.outcome_variable);
    m.z1.resize(t_pre);
    m.z0.resize(t_pre, j_donors);
    auto treated_outcome = panel.series(outcome, treated);
    for (Eigen::Index t = 0; t < t_pre; ++t)
        m.z1(t) = treated_outcome[spec.pre_window.first + static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < j_donors; ++j) {
        auto donor_outcome = panel.series(outcome, donors[static_cast<std::size_t>(j)]);
        for (Eigen::Index t = 0; t < t_pre; ++t)
            m.z0(t, j) =
                donor_outcome[spec.pre_window.first + static_cast<std::size_t>(t)];
    }
    return m;
}

/// Divides each predictor row by its sample standard deviation across the
/// J+1 units so predictor weights are scale-comparable. Rows with zero
/// dispersion are left unscaled.
inline ScmMatrices standardize_predictor_rows(const ScmMatrices& m) {
    ScmMatrices out = m;
    const Eigen::Index k = m.x1.size();
    const Eigen::Index j = m.x0.cols();
    for (Eigen::Index p = 0; p < k; ++p) {
        const double n = static_cast<double>(j + 1);
        double mean = m.x1(p);
        for (Eigen::Index c = 0; c < j; ++c) mean += m.x0(p, c);
        mean /= n;
        double ss = (m.x1(p) - mean) * (m.x1(p) - mean);
        for (Eigen::Index c = 0; c < j; ++c)
            ss += (m.x0(p, c) - mean) * (m.x0(p, c) - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        if (sd > 1e-12) {
            out.x1(p) /= sd;
            out.x0.row(p) /= sd;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inner problem: donor weights for fixed predictor weights
// ---------------------------------------------------------------------------

/// W* = argmin over the J-simplex of sum_m v_m (x1_m - (x0 w)_m)^2.
/// Matrices are used exactly as given; no hidden rescaling.
inline SimplexLsqResult solve_donor_weights_raw(const ScmMatrices& m,
                                                const Eigen::VectorXd& v,
                                                const SimplexLsqOptions& options = {}) {
    const Eigen::VectorXd sqrt_v = v.cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd a = sqrt_v.asDiagonal() * m.x0;
    const Eigen::VectorXd b = sqrt_v.cwiseProduct(m.x1);
    return solve_simplex_lsq(a, b, options);
}

/// Spec-facing wrapper producing labelled donor weights.
inline DonorWeights solve_donor_weights(const ScmMatrices& m,
                                        const std::vector<std::string>& donor_units,
                                        const PredictorWeights& v,
                                        const SimplexLsqOptions& options = {}) {
    Eigen::VectorXd vv(static_cast<Eigen::Index>(v.weights.size()));
    for (std::size_t i = 0; i < v.weights.size(); ++i)
        vv(static_cast<Eigen::Index>(i)) = v.weights[i];
    auto solved = solve_donor_weights_raw(m, vv, options);
    if (!solved.converged)
        throw OptimizerFailure("donor weight solve did not converge");
    DonorWeights out;
    out.units = donor_units;
    out.weights.assign(solved.weights.data(),
                       solved.weights.data() + solved.weights.size());
    return out;
}

// ---------------------------------------------------------------------------
// Outer problem: predictor weights by pre-treatment outcome MSPE
// ---------------------------------------------------------------------------

struct NestedFitResult {
    Eigen::VectorXd v;  // k, on the simplex
    Eigen::VectorXd w;  // J, on the simplex
    double pre_mspe = 0.0;
    double predictor_objective = 0.0;
    bool degenerate = false;
    bool used_fallback = false;
    long evaluations = 0;
    int starts = 0;
};

inline double outcome_mspe(const ScmMatrices& m, const Eigen::VectorXd& w) {
    return (m.z1 - m.z0 * w).squaredNorm() / static_cast<double>(m.z1.size());
}

/// Derivative-free search for V* = argmin over the k-simplex of the
/// pre-treatment outcome MSPE of W(V), with W(V) the inner simplex solve.
/// Multi-start Nelder-Mead in softmax coordinates: deterministic starts at
/// the uniform point and each vertex, the rest Dirichlet draws from `seed`.
/// Best pre-MSPE wins; ties keep the earliest start.
inline NestedFitResult optimize_predictor_weights(const ScmMatrices& m,
                                                  std::uint64_t seed,
                                                  int starts = 24,
                                                  const NelderMeadOptions& nm = {},
                                                  const SimplexLsqOptions& inner = {}) {
    const Eigen::Index k = m.x1.size();
    if (m.z1.size() < 2)
        throw OptimizerFailure("outer search needs at least 2 pre-treatment weeks");

    NestedFitResult best;
    best.pre_mspe = std::numeric_limits<double>::infinity();

    auto evaluate_v = [&](const Eigen::VectorXd& v) {
        auto solved = solve_donor_weights_raw(m, v, inner);
        return std::make_pair(outcome_mspe(m, solved.weights), std::move(solved));
    };

    if (k == 1) {
        Eigen::VectorXd v(1);
        v(0) = 1.0;
        auto [mspe, solved] = evaluate_v(v);
        best.v = v;
        best.w = solved.weights;
        best.pre_mspe = mspe;
        best.predictor_objective = solved.objective;
        best.degenerate = solved.degenerate;
        best.used_fallback = solved.used_fallback;
        best.evaluations = 1;
        best.starts = 1;
        return best;
    }

    bool any_degenerate = false;
    bool any_fallback = false;
    long evaluations = 0;
    auto objective = [&](const Eigen::VectorXd& theta) {
        const Eigen::VectorXd v = softmax_embed(theta);
        auto [mspe, solved] = evaluate_v(v);
        any_degenerate = any_degenerate || solved.degenerate;
        any_fallback = any_fallback || solved.used_fallback;
        ++evaluations;
        return mspe;
    };

    // Start list: uniform, each (near-)vertex, then Dirichlet draws.
    std::vector<Eigen::VectorXd> start_thetas;
    start_thetas.push_back(Eigen::VectorXd::Zero(k - 1));
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(k - 1);
        if (i < k - 1) theta(i) = 12.0;
        else theta.setConstant(-12.0);
        start_thetas.push_back(std::move(theta));
    }
    Rng rng(seed);
    while (static_cast<int>(start_thetas.size()) < std::max(starts, 1)) {
        auto v = rng.dirichlet(static_cast<std::size_t>(k));
        Eigen::VectorXd theta(k - 1);
        const double anchor = std::log(std::max(v.back(), 1e-12));
        for (Eigen::Index i = 0; i < k - 1; ++i)
            theta(i) =
                std::log(std::max(v[static_cast<std::size_t>(i)], 1e-12)) - anchor;
        start_thetas.push_back(std::move(theta));
    }

    Eigen::VectorXd best_theta;
    double best_mspe = std::numeric_limits<double>::infinity();
    for (const auto& theta0 : start_thetas) {
        auto run = nelder_mead(objective, theta0, nm);
        if (run.value < best_mspe) {
            best_mspe = run.value;
            best_theta = run.point;
        }
    }
    // One restart from the winner tightens the local optimum.
    {
        NelderMeadOptions polish = nm;
        polish.initial_step = 0.05;
        auto run = nelder_mead(objective, best_theta, polish);
        if (run.value < best_mspe) {
            best_mspe = run.value;
            best_theta = run.point;
        }
    }

    const Eigen::VectorXd v = softmax_embed(best_theta);
    auto [mspe, solved] = evaluate_v(v);
    best.v = v / v.sum();
    best.w = solved.weights;
    best.pre_mspe = mspe;
    best.predictor_objective = solved.objective;
    best.degenerate = any_degenerate || solved.degenerate;
    best.used_fallback = any_fallback || solved.used_fallback;
    best.evaluations = evaluations;
    best.starts = static_cast<int>(start_thetas.size());
    return best;
}

// ---------------------------------------------------------------------------
// Series assembly and summaries
// ---------------------------------------------------------------------------

/// synthetic[t] = sum_j w_j * outcome_j[t] over the full panel horizon.
inline std::vector<double> synthesize(const PanelDataset& panel,
                                      const StudySpec& spec,
                                      const DonorWeights& w) {
    const std::size_t outcome = panel.variable_index(spec.outcome_variable);
    std::vector<double> synthetic(panel.week_count(), 0.0);
    for (std::size_t j = 0; j < w.units.size(); ++j) {
        auto donor_series = panel.series(outcome, panel.unit_index(w.units[j]));
        const double weight = w.weights[j];
        for (std::size_t t = 0; t < synthetic.size(); ++t)
            synthetic[t] += weight * donor_series[t];
    }
    return synthetic;
}

inline std::vector<double> gap_series(std::span<const double> treated,
                                      std::span<const double> synthetic) {
    if (treated.size() != synthetic.size())
        throw LengthMismatchError(treated.size(), synthetic.size());
    std::vector<double> gap(treated.size());
    for (std::size_t t = 0; t < treated.size(); ++t)
        gap[t] = treated[t] - synthetic[t];
    return gap;
}

struct EffectSummary {
    double average_post_gap = 0.0;
    double pre_mspe = 0.0;
    double post_mspe = 0.0;
};

inline EffectSummary effect_summary(std::span<const double> gap,
                                    const StudySpec& spec) {
    if (spec.pre_window.last >= gap.size() || spec.post_window.last >= gap.size())
        throw EmptyWindowError("window extends past the gap horizon");
    auto window_stats = [&](WeekRange r, const char* name) {
        if (r.first > r.last || r.last >= gap.size()) throw EmptyWindowError(name);
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t t = r.first; t <= r.last; ++t) {
            sum += gap[t];
            sum_sq += gap[t] * gap[t];
        }
        const double n = static_cast<double>(r.length());
        return std::make_pair(sum / n, sum_sq / n);
    };
    EffectSummary out;
    auto [pre_mean, pre_mspe] = window_stats(spec.pre_window, "pre window");
    auto [post_mean, post_mspe] = window_stats(spec.post_window, "post window");
    (void)pre_mean;
    out.average_post_gap = post_mean;
    out.pre_mspe = pre_mspe;
    out.post_mspe = post_mspe;
    return out;
}

/// Balance comparison on the raw (unstandardized) predictor blocks.
inline BalanceTable balance_table(const ScmMatrices& m,
                                  const std::vector<std::string>& predictors,
                                  const Eigen::VectorXd& w) {
    BalanceTable table;
    const Eigen::VectorXd synthetic = m.x0 * w;
    for (Eigen::Index p = 0; p < m.x1.size(); ++p) {
        BalanceRow row;
        row.predictor = predictors[static_cast<std::size_t>(p)];
        row.treated = m.x1(p);
        row.synthetic = synthetic(p);
        row.sample_mean = m.x0.row(p).mean();
        row.improvement = std::abs(row.treated - row.sample_mean) -
                          std::abs(row.treated - row.synthetic);
        table.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Full fit
// ---------------------------------------------------------------------------

/// Runs the complete nested fit for one study. Pure function of
/// (panel, spec, options); identical inputs give identical results.
inline FitResult fit_study(const PanelDataset& panel, const StudySpec& spec,
                           const FitOptions& options = {}) {
    validate_spec(spec, panel);
    const ScmMatrices raw = build_matrices(panel, spec);
    const ScmMatrices scaled =
        options.standardize_predictors ? standardize_predictor_rows(raw) : raw;

    auto nested = optimize_predictor_weights(scaled, options.seed, options.starts,
                                             options.nelder_mead, options.inner);

    FitResult fit;
    fit.spec = spec;
    fit.donor_weights.units = spec.donor_units;
    fit.donor_weights.weights.assign(nested.w.data(),
                                     nested.w.data() + nested.w.size());
    fit.predictor_weights.predictors = spec.predictor_variables;
    fit.predictor_weights.weights.assign(nested.v.data(),
                                         nested.v.data() + nested.v.size());

    const std::size_t outcome = panel.variable_index(spec.outcome_variable);
    auto treated = panel.series(outcome, panel.unit_index(spec.treated_unit));
    fit.treated_outcome.assign(treated.begin(), treated.end());
    fit.synthetic_outcome = synthesize(panel, spec, fit.donor_weights);
    fit.gap = gap_series(fit.treated_outcome, fit.synthetic_outcome);

    const EffectSummary summary = effect_summary(fit.gap, spec);
    fit.pre_mspe = summary.pre_mspe;
    fit.post_mspe = summary.post_mspe;
    fit.average_post_gap = summary.average_post_gap;

    fit.balance = balance_table(raw, spec.predictor_variables, nested.w);

    fit.diagnostics.degenerate = nested.degenerate;
    fit.diagnostics.used_fallback = nested.used_fallback;
    fit.diagnostics.predictor_objective = nested.predictor_objective;
    fit.diagnostics.outer_evaluations = nested.evaluations;
    fit.diagnostics.starts = nested.starts;
    fit.diagnostics.seed = options.seed;
    return fit;
}

}  // namespace synthctl
