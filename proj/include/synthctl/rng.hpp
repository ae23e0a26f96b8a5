#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace synthctl {

/// splitmix64 step; used to derive independent child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic child seed for the i-th subtask of a seeded run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

/// mt19937_64 wrapper with hand-rolled distributions so that streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Modulo bias is irrelevant at the sizes used here (n << 2^64).
        return engine_() % n;
    }

    /// Standard normal via Box-Muller (no cached spare, fixed call pattern).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential() {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return -std::log(u);
    }

    /// Flat Dirichlet draw: a uniform random point on the (n-1)-simplex.
    std::vector<double> dirichlet(std::size_t n) {
        std::vector<double> v(n);
        double total = 0.0;
        for (auto& x : v) {
            x = exponential();
            total += x;
        }
        for (auto& x : v) x /= total;
        return v;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace synthctl
