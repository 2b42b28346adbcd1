#pragma once

#include <cstdint>
#include <compare>
#include <stdexcept>

namespace ktsim {

/// Integer-nanosecond time axis shared by the whole simulator.
/// A single integer axis avoids float drift when mixing cycle-denominated
/// costs with millisecond-scale typing intervals.
class Duration {
public:
    constexpr Duration() noexcept = default;
    static constexpr Duration ns(int64_t v) { return Duration{v}; }
    static constexpr Duration us(int64_t v) { return Duration{v * 1000}; }
    static constexpr Duration ms(int64_t v) { return Duration{v * 1000000}; }
    static constexpr Duration seconds(double s) {
        return Duration{static_cast<int64_t>(s * 1e9 + (s >= 0 ? 0.5 : -0.5))};
    }

    [[nodiscard]] constexpr int64_t nanos() const noexcept { return ns_; }
    [[nodiscard]] constexpr double secs() const noexcept { return static_cast<double>(ns_) * 1e-9; }

    constexpr auto operator<=>(const Duration&) const noexcept = default;
    constexpr Duration operator+(Duration rhs) const noexcept { return Duration{ns_ + rhs.ns_}; }
    constexpr Duration operator-(Duration rhs) const noexcept { return Duration{ns_ - rhs.ns_}; }
    constexpr Duration operator*(int64_t k) const noexcept { return Duration{ns_ * k}; }
    constexpr Duration operator/(int64_t k) const { return Duration{ns_ / k}; }

private:
    explicit constexpr Duration(int64_t v) noexcept : ns_(v) {}
    int64_t ns_ = 0;
};

/// Nanoseconds since simulation start. Non-negative along generated sequences.
class Timestamp {
public:
    constexpr Timestamp() noexcept = default;
    static constexpr Timestamp ns(int64_t v) { return Timestamp{v}; }

    [[nodiscard]] constexpr int64_t nanos() const noexcept { return ns_; }
    [[nodiscard]] constexpr double secs() const noexcept { return static_cast<double>(ns_) * 1e-9; }

    constexpr auto operator<=>(const Timestamp&) const noexcept = default;
    constexpr Timestamp operator+(Duration d) const noexcept { return Timestamp{ns_ + d.nanos()}; }
    constexpr Timestamp operator-(Duration d) const noexcept { return Timestamp{ns_ - d.nanos()}; }
    constexpr Duration operator-(Timestamp rhs) const noexcept { return Duration::ns(ns_ - rhs.ns_); }

private:
    explicit constexpr Timestamp(int64_t v) noexcept : ns_(v) {}
    int64_t ns_ = 0;
};

/// Translates cycle-denominated costs onto the nanosecond axis.
/// Frequency is a scenario parameter; it only matters for interpreting
/// cycle thresholds, never for simulation stepping.
class CpuClock {
public:
    explicit CpuClock(int64_t freq_hz) : freq_hz_(freq_hz) {
        if (freq_hz <= 0) throw std::invalid_argument("CpuClock: frequency must be positive");
    }

    [[nodiscard]] int64_t freq_hz() const noexcept { return freq_hz_; }

    /// round(cycles * 1e9 / freq), half away from zero. Exact in 128-bit.
    [[nodiscard]] Duration cycles_to_duration(int64_t cycles) const noexcept {
        __int128 num = static_cast<__int128>(cycles) * 1000000000 + freq_hz_ / 2;
        return Duration::ns(static_cast<int64_t>(num / freq_hz_));
    }

    [[nodiscard]] int64_t duration_to_cycles(Duration d) const noexcept {
        __int128 num = static_cast<__int128>(d.nanos()) * freq_hz_ + 500000000;
        return static_cast<int64_t>(num / 1000000000);
    }

private:
    int64_t freq_hz_;
};

} // namespace ktsim
