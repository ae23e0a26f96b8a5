#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "synthctl/errors.hpp"

namespace synthctl {

/// Euclidean projection onto the unit simplex (Duchi et al. sort algorithm).
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const auto n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumulative = 0.0;
    double tau = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += u[static_cast<std::size_t>(k)];
        const double candidate =
            (cumulative - 1.0) / static_cast<double>(k + 1);
        if (u[static_cast<std::size_t>(k)] - candidate > 0.0) tau = candidate;
    }
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out[i] = std::max(v[i] - tau, 0.0);
    // Guard against accumulated rounding.
    const double sum = out.sum();
    if (sum > 0.0) out /= sum;
    else out.setConstant(1.0 / static_cast<double>(n));
    return out;
}

struct SimplexLsqOptions {
    double feasibility_tol = 1e-9;
    double kkt_tol = 1e-10;          // reduced-gradient slack for adding indices
    int max_active_set_iters = 0;    // 0: derived from problem size
    int max_fallback_iters = 200000;
};

struct SimplexLsqResult {
    Eigen::VectorXd weights;   // on the simplex
    double objective = 0.0;    // ||A w - b||^2
    bool converged = false;
    bool degenerate = false;   // singular subproblem seen: optimum may be non-unique
    bool used_fallback = false;
    int iterations = 0;
};

namespace detail {

inline double lsq_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& w) {
    return (a * w - b).squaredNorm();
}

/// Equality-constrained subproblem on the support set:
///   min ||A_P u - b||^2  s.t.  sum(u) = 1.
/// Returns {u, lambda, singular}. Singular KKT systems are resolved with a
/// rank-revealing least-squares solve (minimum-norm stationary point).
struct SupportSolve {
    Eigen::VectorXd u;
    double lambda = 0.0;
    bool singular = false;
};

inline SupportSolve solve_on_support(const Eigen::MatrixXd& a,
                                     const Eigen::VectorXd& b,
                                     const std::vector<Eigen::Index>& support) {
    const auto n = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd ap(a.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i)
        ap.col(i) = a.col(support[static_cast<std::size_t>(i)]);

    Eigen::MatrixXd kkt(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = 2.0 * (ap.transpose() * ap);
    kkt.topRightCorner(n, 1).setConstant(1.0);
    kkt.bottomLeftCorner(1, n).setConstant(1.0);
    kkt(n, n) = 0.0;

    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = 2.0 * (ap.transpose() * b);
    rhs(n) = 1.0;

    SupportSolve out;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.isInvertible()) {
        Eigen::VectorXd sol = lu.solve(rhs);
        out.u = sol.head(n);
        out.lambda = sol(n);
        return out;
    }
    // Collinear donors: pick the minimum-norm stationary point and flag it.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
    Eigen::VectorXd sol = cod.solve(rhs);
    out.u = sol.head(n);
    out.lambda = sol(n);
    out.singular = true;
    return out;
}

}  // namespace detail

/// Minimizes ||A w - b||^2 over the unit simplex {w >= 0, sum w = 1}.
///
/// Primal active-set method in the style of Lawson-Hanson NNLS, adapted to
/// the simplex equality constraint: starts from the best vertex, alternates
/// support solves with blocking-constraint steps, and grows the support by
/// the most violated reduced gradient. A FISTA projection fallback catches
/// the rare cycling case (duplicate or collinear columns).
inline SimplexLsqResult solve_simplex_lsq(const Eigen::MatrixXd& a,
                                          const Eigen::VectorXd& b,
                                          const SimplexLsqOptions& options = {}) {
    const Eigen::Index n = a.cols();
    if (n == 0) throw OptimizerFailure("no columns to weight");
    if (!a.allFinite() || !b.allFinite())
        throw OptimizerFailure("non-finite entries in least-squares system");

    SimplexLsqResult result;
    result.weights = Eigen::VectorXd::Zero(n);

    // Best single vertex as the starting support (deterministic tie-break).
    Eigen::Index best_vertex = 0;
    double best_vertex_obj = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double obj = (a.col(j) - b).squaredNorm();
        if (obj < best_vertex_obj) {
            best_vertex_obj = obj;
            best_vertex = j;
        }
    }

    std::vector<Eigen::Index> support{best_vertex};
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w[best_vertex] = 1.0;

    const double scale = std::max(1.0, b.squaredNorm());
    const double add_tol = options.kkt_tol * scale;
    const int max_iters = options.max_active_set_iters > 0
                              ? options.max_active_set_iters
                              : static_cast<int>(60 * n + 120);

    auto in_support = [&](Eigen::Index j) {
        return std::find(support.begin(), support.end(), j) != support.end();
    };

    bool converged = false;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        auto sub = detail::solve_on_support(a, b, support);
        if (sub.singular) result.degenerate = true;
        if (!sub.u.allFinite()) break;  // fall back

        const double min_u = support.size() == 1 ? sub.u[0] : sub.u.minCoeff();
        if (min_u >= -1e-12) {
            // Feasible on the support; check global KKT conditions.
            for (std::size_t i = 0; i < support.size(); ++i)
                w[support[i]] = std::max(sub.u[static_cast<Eigen::Index>(i)], 0.0);
            for (Eigen::Index j = 0; j < n; ++j)
                if (!in_support(j)) w[j] = 0.0;

            // Equality multiplier taken from the gradient itself (the support
            // gradients coincide with it at a subproblem optimum), which
            // avoids depending on the KKT block sign convention.
            const Eigen::VectorXd grad = 2.0 * (a.transpose() * (a * w - b));
            double lambda = 0.0;
            for (Eigen::Index j : support) lambda += grad[j];
            lambda /= static_cast<double>(support.size());

            Eigen::Index worst = -1;
            double worst_violation = -add_tol;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (in_support(j)) continue;
                const double violation = grad[j] - lambda;
                if (violation < worst_violation) {
                    worst_violation = violation;
                    worst = j;
                }
            }
            if (worst < 0) {
                converged = true;
                break;
            }
            support.push_back(worst);
        } else {
            // Step toward u until the first weight hits zero, then shrink.
            double alpha = 1.0;
            for (std::size_t i = 0; i < support.size(); ++i) {
                const double ui = sub.u[static_cast<Eigen::Index>(i)];
                if (ui < 0.0) {
                    const double wi = w[support[i]];
                    alpha = std::min(alpha, wi / (wi - ui));
                }
            }
            for (std::size_t i = 0; i < support.size(); ++i) {
                const double ui = sub.u[static_cast<Eigen::Index>(i)];
                w[support[i]] += alpha * (ui - w[support[i]]);
            }
            std::vector<Eigen::Index> next;
            next.reserve(support.size());
            for (Eigen::Index j : support) {
                if (w[j] > 1e-14) next.push_back(j);
                else w[j] = 0.0;
            }
            if (next.empty()) next.push_back(support.front());
            support = std::move(next);
        }
    }
    result.iterations = iter;

    if (!converged) {
        // FISTA with simplex projection from the best feasible point so far.
        result.used_fallback = true;
        const Eigen::MatrixXd gram = a.transpose() * a;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(gram);
        const double lipschitz = std::max(2.0 * eigs.eigenvalues().maxCoeff(), 1e-12);

        Eigen::VectorXd x = project_to_simplex(w);
        Eigen::VectorXd y = x;
        double t = 1.0;
        double fx = detail::lsq_objective(a, b, x);
        int flat_streak = 0;
        for (int k = 0; k < options.max_fallback_iters; ++k) {
            const Eigen::VectorXd grad = 2.0 * (gram * y - a.transpose() * b);
            Eigen::VectorXd x_next = project_to_simplex(y - grad / lipschitz);
            const double fx_next = detail::lsq_objective(a, b, x_next);
            if (fx_next > fx) {  // restart momentum
                y = x;
                t = 1.0;
                continue;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = x_next + ((t - 1.0) / t_next) * (x_next - x);
            t = t_next;
            flat_streak = (fx - fx_next <= 1e-17 * (1.0 + fx)) ? flat_streak + 1 : 0;
            x = std::move(x_next);
            fx = fx_next;
            if (flat_streak >= 64) break;
        }
        // Polish: re-solve on the identified support.
        std::vector<Eigen::Index> polish_support;
        for (Eigen::Index j = 0; j < n; ++j)
            if (x[j] > 1e-10) polish_support.push_back(j);
        if (!polish_support.empty()) {
            auto sub = detail::solve_on_support(a, b, polish_support);
            if (sub.singular) result.degenerate = true;
            if (sub.u.allFinite() && sub.u.minCoeff() >= -1e-12) {
                Eigen::VectorXd polished = Eigen::VectorXd::Zero(n);
                for (std::size_t i = 0; i < polish_support.size(); ++i)
                    polished[polish_support[i]] =
                        std::max(sub.u[static_cast<Eigen::Index>(i)], 0.0);
                if (detail::lsq_objective(a, b, polished) <= fx) x = polished;
            }
        }
        w = x;
        converged = true;
    }

    // Clip rounding dust and renormalize to the simplex exactly.
    for (Eigen::Index j = 0; j < n; ++j) w[j] = std::max(w[j], 0.0);
    const double sum = w.sum();
    if (!(sum > 0.0)) throw OptimizerFailure("solver produced a zero weight vector");
    w /= sum;
    if (std::abs(w.sum() - 1.0) > options.feasibility_tol)
        throw OptimizerFailure("weights violate the simplex feasibility tolerance");

    result.weights = w;
    result.objective = detail::lsq_objective(a, b, w);
    result.converged = converged;
    return result;
}

// ---------------------------------------------------------------------------
// Nelder-Mead over the simplex via softmax reparameterization
// ---------------------------------------------------------------------------

/// softmax([theta, 0]): maps R^(k-1) onto the interior of the k-simplex.
inline Eigen::VectorXd softmax_embed(const Eigen::VectorXd& theta) {
    const Eigen::Index k = theta.size() + 1;
    Eigen::VectorXd logits(k);
    logits.head(k - 1) = theta;
    logits(k - 1) = 0.0;
    const double m = logits.maxCoeff();
    Eigen::VectorXd v = (logits.array() - m).exp();
    return v / v.sum();
}

struct NelderMeadOptions {
    int max_iterations = 600;
    double objective_tol = 1e-13;
    double simplex_tol = 1e-11;
    double initial_step = 0.75;
};

struct NelderMeadResult {
    Eigen::VectorXd point;
    double value = std::numeric_limits<double>::infinity();
    long evaluations = 0;
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5) on an unconstrained R^n objective.
template <typename Fn>
NelderMeadResult nelder_mead(Fn&& objective, const Eigen::VectorXd& start,
                             const NelderMeadOptions& options = {}) {
    const Eigen::Index n = start.size();
    NelderMeadResult result;

    std::vector<Eigen::VectorXd> pts;
    std::vector<double> vals;
    pts.reserve(static_cast<std::size_t>(n + 1));
    pts.push_back(start);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd p = start;
        p[i] += options.initial_step;
        pts.push_back(std::move(p));
    }
    for (const auto& p : pts) {
        vals.push_back(objective(p));
        ++result.evaluations;
    }

    std::vector<std::size_t> order(pts.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return vals[l] < vals[r]; });
    };

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        sort_simplex();
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        if (std::abs(vals[worst] - vals[best]) <=
            options.objective_tol * (1.0 + std::abs(vals[best]))) {
            double spread = 0.0;
            for (const auto& p : pts)
                spread = std::max(spread, (p - pts[best]).lpNorm<Eigen::Infinity>());
            if (spread <= options.simplex_tol) break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (i != worst) centroid += pts[i];
        centroid /= static_cast<double>(pts.size() - 1);

        auto eval = [&](const Eigen::VectorXd& p) {
            ++result.evaluations;
            return objective(p);
        };

        const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
        const double f_reflected = eval(reflected);
        if (f_reflected < vals[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                pts[worst] = expanded;
                vals[worst] = f_expanded;
            } else {
                pts[worst] = reflected;
                vals[worst] = f_reflected;
            }
        } else if (f_reflected < vals[second_worst]) {
            pts[worst] = reflected;
            vals[worst] = f_reflected;
        } else {
            const bool outside = f_reflected < vals[worst];
            const Eigen::VectorXd contracted =
                outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                        : Eigen::VectorXd(centroid - 0.5 * (centroid - pts[worst]));
            const double f_contracted = eval(contracted);
            if (f_contracted < std::min(f_reflected, vals[worst])) {
                pts[worst] = contracted;
                vals[worst] = f_contracted;
            } else {
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    vals[i] = eval(pts[i]);
                }
            }
        }
    }

    sort_simplex();
    result.point = pts[order.front()];
    result.value = vals[order.front()];
    return result;
}

}  // namespace synthctl
