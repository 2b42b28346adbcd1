#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "ktsim/time.hpp"

namespace ktsim {

/// Deterministic generator used everywhere in the simulator.
///
/// xoshiro256** seeded through splitmix64. One root seed per run; every
/// module derives an independent stream by hashing (seed, label), so adding
/// a consumer never perturbs the draws of existing ones.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {
        uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    /// Independent stream keyed by label (and optional index for trials).
    [[nodiscard]] Rng derive(std::string_view label, uint64_t index = 0) const {
        uint64_t x = seed_ ^ (fnv1a(label) + 0x9e3779b97f4a7c15ULL);
        uint64_t mixed = splitmix64(x);
        x ^= (index + 1) * 0xbf58476d1ce4e5b9ULL;
        return Rng(mixed ^ splitmix64(x));
    }

    uint64_t next_u64() noexcept {
        uint64_t result = rotl(state_[1] * 5, 7) * 9;
        uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + uniform() * (hi - lo); }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform integer in [0, n), multiply-shift reduction.
    uint64_t uniform_below(uint64_t n) noexcept {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Uniform Duration in [lo, hi], one draw, nanosecond resolution.
    Duration uniform_duration(Duration lo, Duration hi) {
        if (lo > hi) throw std::invalid_argument("uniform_duration: lo > hi");
        uint64_t span = static_cast<uint64_t>(hi.nanos() - lo.nanos());
        if (span == UINT64_MAX) return Duration::ns(static_cast<int64_t>(next_u64()));
        return Duration::ns(lo.nanos() + static_cast<int64_t>(uniform_below(span + 1)));
    }

    /// Standard normal via Box-Muller (cosine branch only, two draws).
    double gaussian() noexcept {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double gaussian(double mu, double sigma) noexcept { return mu + sigma * gaussian(); }

    /// Gaussian Duration truncated (clamped) at lo.
    Duration gaussian_duration(Duration mu, Duration sigma, Duration lo) {
        if (sigma < Duration::ns(0)) throw std::invalid_argument("gaussian_duration: sigma < 0");
        double v = gaussian(static_cast<double>(mu.nanos()), static_cast<double>(sigma.nanos()));
        int64_t n = static_cast<int64_t>(std::llround(v));
        return Duration::ns(n < lo.nanos() ? lo.nanos() : n);
    }

    /// Exponential inter-arrival gap for a Poisson process of the given rate.
    Duration exponential_gap(double rate_per_s) {
        if (rate_per_s <= 0) throw std::invalid_argument("exponential_gap: rate must be positive");
        double u = uniform();
        double gap_s = -std::log(1.0 - u) / rate_per_s;
        return Duration::ns(static_cast<int64_t>(gap_s * 1e9) + 1);
    }

private:
    static constexpr uint64_t rotl(uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& x) noexcept {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static uint64_t fnv1a(std::string_view s) noexcept {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    uint64_t seed_ = 0;
    uint64_t state_[4] = {};
};

} // namespace ktsim
