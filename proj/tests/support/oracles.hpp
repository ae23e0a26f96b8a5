#pragma once

// Test-only reference implementations, independent of the library's
// optimization path. The brute-force grid searches enumerate integer
// compositions of the simplex and evaluate objectives directly.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracles {

/// Visits every point of the J-simplex grid with the given step (1/steps),
/// i.e. all w = (n1, .., nJ)/steps with non-negative integers summing to
/// `steps`. The callback receives the weight vector.
inline void for_each_simplex_grid_point(
    int dims, int steps, const std::function<void(const Eigen::VectorXd&)>& visit) {
    Eigen::VectorXd w(dims);
    std::vector<int> counts(static_cast<std::size_t>(dims), 0);
    std::function<void(int, int)> recurse = [&](int dim, int remaining) {
        if (dim == dims - 1) {
            counts[static_cast<std::size_t>(dim)] = remaining;
            for (int i = 0; i < dims; ++i)
                w(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
                       static_cast<double>(steps);
            visit(w);
            return;
        }
        for (int n = 0; n <= remaining; ++n) {
            counts[static_cast<std::size_t>(dim)] = n;
            recurse(dim + 1, remaining - n);
        }
    };
    recurse(0, steps);
}

/// Brute-force minimum of sum_m v_m (x1_m - (x0 w)_m)^2 over the simplex
/// grid. Specialized inner loop: stepping the last two coordinates against
/// each other updates the residual incrementally, which keeps step=0.001 at
/// J=4 tractable.
inline double grid_min_weighted_lsq(const Eigen::MatrixXd& x0,
                                    const Eigen::VectorXd& x1,
                                    const Eigen::VectorXd& v, int steps) {
    const int dims = static_cast<int>(x0.cols());
    const int k = static_cast<int>(x0.rows());
    const Eigen::VectorXd sqrt_v = v.cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd a = sqrt_v.asDiagonal() * x0;
    const Eigen::VectorXd b = sqrt_v.cwiseProduct(x1);

    double best = std::numeric_limits<double>::infinity();
    if (dims == 1) {
        return (a.col(0) - b).squaredNorm();
    }

    const double inv_steps = 1.0 / static_cast<double>(steps);
    // Direction applied when moving one grid unit from the last column to
    // the second-to-last column.
    const Eigen::VectorXd swap_dir = (a.col(dims - 2) - a.col(dims - 1)) * inv_steps;

    std::vector<int> outer(static_cast<std::size_t>(std::max(dims - 2, 0)), 0);
    std::function<void(int, int, const Eigen::VectorXd&)> recurse =
        [&](int dim, int remaining, const Eigen::VectorXd& partial) {
            if (dim == dims - 2) {
                // residual with everything remaining on the last column
                Eigen::VectorXd r = partial +
                                    a.col(dims - 1) * (remaining * inv_steps) - b;
                for (int n = 0;; ++n) {
                    double obj = 0.0;
                    for (int m = 0; m < k; ++m) obj += r(m) * r(m);
                    if (obj < best) best = obj;
                    if (n == remaining) break;
                    r += swap_dir;
                }
                return;
            }
            for (int n = 0; n <= remaining; ++n) {
                recurse(dim + 1, remaining - n,
                        Eigen::VectorXd(partial + a.col(dim) * (n * inv_steps)));
            }
        };
    recurse(0, steps, Eigen::VectorXd::Zero(k));
    return best;
}

/// Brute-force minimum over a V-grid of an arbitrary objective(V).
inline double grid_min_over_v(
    int k, int steps, const std::function<double(const Eigen::VectorXd&)>& objective) {
    double best = std::numeric_limits<double>::infinity();
    for_each_simplex_grid_point(k, steps, [&](const Eigen::VectorXd& v) {
        const double value = objective(v);
        if (value < best) best = value;
    });
    return best;
}

/// Direct-formula sample Pearson correlation.
inline double pearson_reference(const std::vector<double>& x,
                                const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    return cov / std::sqrt(vx * vy);
}

}  // namespace oracles
