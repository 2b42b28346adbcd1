// Compares the serial reference kernels against the OpenMP variants on
// synthetic inputs sized like a 60 s attack run. Build with and without
// OpenMP to see the difference; results must match bit for bit.

#include <chrono>
#include <cstdio>
#include <vector>

#include "ktsim/kernels.hpp"
#include "ktsim/rng.hpp"

using namespace ktsim;

namespace {

template <typename F>
double time_ms(F&& f, int iters) {
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) f();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

} // namespace

int main() {
    std::printf("openmp: %s (%d threads)\n", kernels::openmp_enabled() ? "on" : "off",
                kernels::hardware_threads());

    Rng gen(7);

    // windowed sum over a 60 s / 20 us probe grid
    {
        std::vector<uint16_t> x(3'000'000);
        for (auto& v : x) v = static_cast<uint16_t>(gen.uniform_below(6));
        std::vector<int32_t> a, b;
        double ts = time_ms([&] { a = kernels::windowed_sum_serial(x, 25); }, 5);
        double tp = time_ms([&] { b = kernels::windowed_sum_omp(x, 25); }, 5);
        bool eq = a == b;
        std::printf("windowed_sum   n=%zu  serial %.2f ms  omp %.2f ms  speedup %.2fx  equal=%s\n",
                    x.size(), ts, tp, ts / tp, eq ? "yes" : "NO");
    }

    // Gaussian correlation over a 2 s / 1 ms profile
    {
        std::vector<double> prof(2000);
        for (auto& v : prof) v = gen.uniform();
        std::vector<double> kernel(321);
        for (size_t i = 0; i < kernel.size(); ++i) kernel[i] = 1.0 / static_cast<double>(kernel.size());
        std::vector<double> a, b;
        double ts = time_ms([&] { a = kernels::correlate_serial(prof, kernel); }, 200);
        double tp = time_ms([&] { b = kernels::correlate_omp(prof, kernel); }, 200);
        bool eq = a == b;
        std::printf("correlate      n=%zu  serial %.3f ms  omp %.3f ms  speedup %.2fx  equal=%s\n",
                    prof.size(), ts, tp, ts / tp, eq ? "yes" : "NO");
    }

    // histogram accumulation over 4096 traces of ~208 events
    {
        std::vector<std::vector<int64_t>> traces(4096);
        for (auto& tr : traces) {
            tr.resize(208);
            for (auto& t : tr) t = static_cast<int64_t>(gen.uniform_below(2'000'000'000));
        }
        std::vector<int64_t> a(2000), b(2000);
        double ts = time_ms(
            [&] {
                std::fill(a.begin(), a.end(), 0);
                kernels::add_histograms_serial(traces, 1'000'000, a);
            },
            20);
        double tp = time_ms(
            [&] {
                std::fill(b.begin(), b.end(), 0);
                kernels::add_histograms_omp(traces, 1'000'000, b);
            },
            20);
        bool eq = a == b;
        std::printf("add_histograms n=%zu  serial %.3f ms  omp %.3f ms  speedup %.2fx  equal=%s\n",
                    traces.size(), ts, tp, ts / tp, eq ? "yes" : "NO");
    }
    return 0;
}
