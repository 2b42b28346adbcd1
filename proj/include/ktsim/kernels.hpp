#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ktsim::kernels {

// Data-parallel inner loops used by the attackers and the multi-trace
// analysis. Every kernel has a serial reference implementation and an
// OpenMP variant; both compute each output element with the same
// summation order, so results are identical independent of thread count.
// tools/bench_kernels compares them.

/// Centered sliding-window sum of width `window` (clamped at the edges).
/// Output element i sums x[max(0,i-h) .. min(n-1,i+h)], h = window/2.
std::vector<int32_t> windowed_sum_serial(std::span<const uint16_t> x, int window);
std::vector<int32_t> windowed_sum_omp(std::span<const uint16_t> x, int window);
std::vector<int32_t> windowed_sum(std::span<const uint16_t> x, int window);

/// Dense cross-correlation of a profile with a small kernel, zero padded.
/// Output[i] = sum_k profile[i + k - half] * kernel[k].
std::vector<double> correlate_serial(std::span<const double> profile, std::span<const double> kernel);
std::vector<double> correlate_omp(std::span<const double> profile, std::span<const double> kernel);
std::vector<double> correlate(std::span<const double> profile, std::span<const double> kernel);

/// Bin event times (nanoseconds) into int64 counts over [0, n_bins * bin_ns).
/// Out-of-range times are dropped. `add_histogram_*` accumulate many trace
/// slices; counts are integers so thread partials merge exactly.
void bin_events_serial(std::span<const int64_t> times_ns, int64_t bin_ns,
                       std::span<int64_t> counts);
void add_histograms_omp(const std::vector<std::vector<int64_t>>& traces, int64_t bin_ns,
                        std::span<int64_t> counts);
void add_histograms_serial(const std::vector<std::vector<int64_t>>& traces, int64_t bin_ns,
                           std::span<int64_t> counts);

/// True when this build runs the OpenMP variants.
bool openmp_enabled();
int hardware_threads();

} // namespace ktsim::kernels
