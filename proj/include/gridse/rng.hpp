#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace gridse {

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is pinned by the standard), and all distributions are implemented
// here rather than with std::*_distribution, whose sequences vary between
// standard libraries. Given the same seed the byte stream of every generated
// artifact is identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Child stream addressed by a path of indices, e.g. (seed, {grid, sample}).
    // Parallel and serial sweeps that derive one stream per cell produce
    // identical results.
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t s = seed;
        for (std::uint64_t id : path) s = mix(s ^ (id + 0x9e3779b97f4a7c15ULL));
        return Rng(mix(s));
    }

    std::uint64_t bits() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) return bits();  // full range
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t v = bits();
        while (v >= limit) v = bits();
        return lo + v % span;
    }

    int index(int n) { return static_cast<int>(uniform_int(0, static_cast<std::uint64_t>(n) - 1)); }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
    // so the stream position is a pure function of the call count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    // splitmix64 finalizer; used only for seed derivation.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace gridse
