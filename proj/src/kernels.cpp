#include "ktsim/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ktsim::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

// Window sum for one output index, recomputed from scratch. Used at chunk
// starts so every chunk reproduces the serial running sum exactly.
inline int32_t window_at(std::span<const uint16_t> x, int64_t i, int h) {
    int64_t n = static_cast<int64_t>(x.size());
    int64_t lo = std::max<int64_t>(0, i - h);
    int64_t hi = std::min<int64_t>(n - 1, i + h);
    int32_t s = 0;
    for (int64_t j = lo; j <= hi; ++j) s += x[j];
    return s;
}

} // namespace

std::vector<int32_t> windowed_sum_serial(std::span<const uint16_t> x, int window) {
    int64_t n = static_cast<int64_t>(x.size());
    std::vector<int32_t> out(n);
    if (n == 0) return out;
    int h = std::max(0, window / 2);
    int32_t s = window_at(x, 0, h);
    out[0] = s;
    for (int64_t i = 1; i < n; ++i) {
        int64_t add = i + h;
        int64_t del = i - h - 1;
        if (add < n) s += x[add];
        if (del >= 0) s -= x[del];
        out[i] = s;
    }
    return out;
}

std::vector<int32_t> windowed_sum_omp(std::span<const uint16_t> x, int window) {
    int64_t n = static_cast<int64_t>(x.size());
    std::vector<int32_t> out(n);
    if (n == 0) return out;
    int h = std::max(0, window / 2);
#ifdef _OPENMP
#pragma omp parallel
    {
        int nt = omp_get_num_threads();
        int tid = omp_get_thread_num();
        int64_t chunk = (n + nt - 1) / nt;
        int64_t lo = tid * chunk;
        int64_t hi = std::min(n, lo + chunk);
        if (lo < hi) {
            int32_t s = window_at(x, lo, h);
            out[lo] = s;
            for (int64_t i = lo + 1; i < hi; ++i) {
                int64_t add = i + h;
                int64_t del = i - h - 1;
                if (add < n) s += x[add];
                if (del >= 0) s -= x[del];
                out[i] = s;
            }
        }
    }
    return out;
#else
    return windowed_sum_serial(x, window);
#endif
}

std::vector<int32_t> windowed_sum(std::span<const uint16_t> x, int window) {
#ifdef _OPENMP
    if (x.size() >= 1u << 16) return windowed_sum_omp(x, window);
#endif
    return windowed_sum_serial(x, window);
}

std::vector<double> correlate_serial(std::span<const double> profile, std::span<const double> kernel) {
    int64_t n = static_cast<int64_t>(profile.size());
    int64_t m = static_cast<int64_t>(kernel.size());
    int64_t half = m / 2;
    std::vector<double> out(n, 0.0);
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        int64_t k0 = std::max<int64_t>(0, half - i);
        int64_t k1 = std::min<int64_t>(m, n + half - i);
        for (int64_t k = k0; k < k1; ++k) s += profile[i + k - half] * kernel[k];
        out[i] = s;
    }
    return out;
}

std::vector<double> correlate_omp(std::span<const double> profile, std::span<const double> kernel) {
    int64_t n = static_cast<int64_t>(profile.size());
    int64_t m = static_cast<int64_t>(kernel.size());
    int64_t half = m / 2;
    std::vector<double> out(n, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        int64_t k0 = std::max<int64_t>(0, half - i);
        int64_t k1 = std::min<int64_t>(m, n + half - i);
        for (int64_t k = k0; k < k1; ++k) s += profile[i + k - half] * kernel[k];
        out[i] = s;
    }
    return out;
}

std::vector<double> correlate(std::span<const double> profile, std::span<const double> kernel) {
#ifdef _OPENMP
    if (profile.size() * kernel.size() >= 1u << 18) return correlate_omp(profile, kernel);
#endif
    return correlate_serial(profile, kernel);
}

void bin_events_serial(std::span<const int64_t> times_ns, int64_t bin_ns,
                       std::span<int64_t> counts) {
    int64_t n_bins = static_cast<int64_t>(counts.size());
    for (int64_t t : times_ns) {
        if (t < 0) continue;
        int64_t b = t / bin_ns;
        if (b < n_bins) counts[b]++;
    }
}

void add_histograms_serial(const std::vector<std::vector<int64_t>>& traces, int64_t bin_ns,
                           std::span<int64_t> counts) {
    for (const auto& tr : traces) bin_events_serial(tr, bin_ns, counts);
}

void add_histograms_omp(const std::vector<std::vector<int64_t>>& traces, int64_t bin_ns,
                        std::span<int64_t> counts) {
#ifdef _OPENMP
    int64_t n_bins = static_cast<int64_t>(counts.size());
#pragma omp parallel
    {
        std::vector<int64_t> local(n_bins, 0);
#pragma omp for schedule(static) nowait
        for (int64_t i = 0; i < static_cast<int64_t>(traces.size()); ++i) {
            bin_events_serial(traces[i], bin_ns, local);
        }
#pragma omp critical
        {
            for (int64_t b = 0; b < n_bins; ++b) counts[b] += local[b];
        }
    }
#else
    add_histograms_serial(traces, bin_ns, counts);
#endif
}

} // namespace ktsim::kernels
