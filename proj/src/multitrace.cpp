#include "ktsim/multitrace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ktsim/kernels.hpp"

namespace ktsim {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Stationary fake train over [0, span): renewal with U[inj_lo, inj_hi]
// gaps, warm-started well before zero so the window sees no startup
// transient (a cold start leaves a density ripple the locator would read
// as structure).
void append_fake_train(const DefenseConfig& cfg, Duration span, Rng& gen,
                       std::vector<Timestamp>& out) {
    const Duration warmup = cfg.inj_hi * 5;
    int64_t t = -warmup.nanos();
    for (;;) {
        t += gen.uniform_duration(cfg.inj_lo, cfg.inj_hi).nanos();
        if (t >= span.nanos()) break;
        if (t >= 0) out.push_back(Timestamp::ns(t));
    }
}

} // namespace

void PasswordAttackParams::validate() const {
    require(n_keys >= 1, "PasswordAttackParams: n_keys must be >= 1");
    require(sigma >= Duration::ns(0), "PasswordAttackParams: sigma must be non-negative");
    require(bin > Duration::ns(0), "PasswordAttackParams: bin must be positive");
    require(span.nanos() % bin.nanos() == 0, "PasswordAttackParams: bin must divide span");
    require(max_traces >= 1 && pool_size >= max_traces,
            "PasswordAttackParams: pool must cover max_traces");
    int64_t mean_gap = span.nanos() / (n_keys + 1);
    if (sigma.nanos() == 0 && mean_gap * (n_keys - 1) >= span.nanos())
        throw std::invalid_argument("PasswordAttackParams: keys do not fit within span");
}

std::vector<Timestamp> canonical_schedule(const PasswordAttackParams& params, Rng& gen) {
    params.validate();
    const int n = params.n_keys;
    const Duration mean_gap = Duration::ns(params.span.nanos() / (n + 1));
    const int64_t margin = 3 * params.sigma.nanos();
    const int64_t min_sep = 2 * params.sigma.nanos();

    for (int attempt = 0; attempt < 256; ++attempt) {
        std::vector<int64_t> gaps(static_cast<size_t>(std::max(0, n - 1)));
        int64_t total = 0;
        for (auto& g : gaps) {
            g = gen.gaussian_duration(mean_gap, params.sigma, Duration::ns(1)).nanos();
            total += g;
        }
        if (total + 2 * margin >= params.span.nanos()) continue;
        int64_t start = (params.span.nanos() - total) / 2;
        std::vector<Timestamp> keys;
        keys.reserve(static_cast<size_t>(n));
        int64_t t = start;
        keys.push_back(Timestamp::ns(t));
        bool ok = start >= margin;
        for (int64_t g : gaps) {
            ok = ok && g > min_sep;
            t += g;
            keys.push_back(Timestamp::ns(t));
        }
        ok = ok && (params.span.nanos() - t) >= margin;
        if (ok || params.sigma.nanos() == 0) return keys;
    }
    throw std::invalid_argument("canonical_schedule: could not place keys with the required margins");
}

AlignedTrace simulate_trace(const PasswordAttackParams& params,
                            const std::vector<Timestamp>& canonical, Rng& gen) {
    AlignedTrace tr;
    tr.event_times.reserve(canonical.size() + 256);
    const int64_t max_t = params.span.nanos() - 1;
    for (Timestamp k : canonical) {
        double jitter = gen.gaussian(0.0, static_cast<double>(params.sigma.nanos()));
        int64_t t = k.nanos() + static_cast<int64_t>(std::llround(jitter));
        t = std::clamp<int64_t>(t, 0, max_t);
        tr.event_times.push_back(Timestamp::ns(t));
    }
    if (params.defense.enabled) append_fake_train(params.defense, params.span, gen, tr.event_times);
    std::sort(tr.event_times.begin(), tr.event_times.end());
    return tr;
}

std::pair<std::vector<AlignedTrace>, std::vector<Timestamp>>
simulate_password_traces(const PasswordAttackParams& params, int n_traces, Rng& gen) {
    require(n_traces >= 1, "simulate_password_traces: n_traces must be >= 1");
    Rng cgen = gen.derive("canonical");
    auto canonical = canonical_schedule(params, cgen);
    std::vector<AlignedTrace> traces;
    traces.reserve(static_cast<size_t>(n_traces));
    for (int i = 0; i < n_traces; ++i) {
        Rng tgen = gen.derive("trace", static_cast<uint64_t>(i));
        traces.push_back(simulate_trace(params, canonical, tgen));
    }
    return {std::move(traces), std::move(canonical)};
}

DensityProfile average_aligned(const std::vector<AlignedTrace>& traces, Duration bin,
                               Duration span) {
    require(!traces.empty(), "average_aligned: empty trace list");
    require(bin > Duration::ns(0), "average_aligned: bin must be positive");
    const int64_t n_bins = span.nanos() / bin.nanos();

    std::vector<std::vector<int64_t>> raw;
    raw.reserve(traces.size());
    for (const auto& tr : traces) {
        std::vector<int64_t> ts;
        ts.reserve(tr.event_times.size());
        for (Timestamp t : tr.event_times) ts.push_back(t.nanos());
        raw.push_back(std::move(ts));
    }
    std::vector<int64_t> counts(static_cast<size_t>(n_bins), 0);
    kernels::add_histograms_omp(raw, bin.nanos(), counts);

    DensityProfile p;
    p.bin = bin;
    p.mass.resize(static_cast<size_t>(n_bins));
    const double inv = 1.0 / static_cast<double>(traces.size());
    for (int64_t i = 0; i < n_bins; ++i) p.mass[static_cast<size_t>(i)] = static_cast<double>(counts[static_cast<size_t>(i)]) * inv;
    return p;
}

std::vector<Timestamp> locate_keystrokes(const DensityProfile& profile, int n_keys,
                                         Duration sigma, Duration kernel_std,
                                         double refine_window_sigmas) {
    require(n_keys >= 1, "locate_keystrokes: n_keys must be >= 1");
    require(!profile.mass.empty(), "locate_keystrokes: empty profile");
    const int64_t bin_ns = profile.bin.nanos();
    const int64_t n_bins = static_cast<int64_t>(profile.mass.size());

    const int64_t kstd = kernel_std.nanos() > 0 ? kernel_std.nanos() : sigma.nanos();
    int64_t half_bins = std::max<int64_t>(1, (4 * kstd) / bin_ns);
    std::vector<double> kernel(static_cast<size_t>(2 * half_bins + 1));
    double norm = 0.0;
    for (int64_t k = -half_bins; k <= half_bins; ++k) {
        double x = static_cast<double>(k * bin_ns);
        double v = std::exp(-x * x / (2.0 * static_cast<double>(kstd) * static_cast<double>(kstd)));
        kernel[static_cast<size_t>(k + half_bins)] = v;
        norm += v;
    }
    for (auto& v : kernel) v /= norm;

    std::vector<double> field = kernels::correlate(profile.mass, kernel);

    const int64_t suppress = std::max<int64_t>(1, (2 * sigma.nanos()) / bin_ns);
    std::vector<int64_t> picks;
    picks.reserve(static_cast<size_t>(n_keys));
    for (int k = 0; k < n_keys; ++k) {
        int64_t best = 0;
        for (int64_t i = 1; i < n_bins; ++i)
            if (field[static_cast<size_t>(i)] > field[static_cast<size_t>(best)]) best = i;
        picks.push_back(best);
        int64_t lo = std::max<int64_t>(0, best - suppress);
        int64_t hi = std::min(n_bins - 1, best + suppress);
        for (int64_t i = lo; i <= hi; ++i) field[static_cast<size_t>(i)] = -1e300;
    }

    // refine each pick by the first moment of the raw profile around it
    const int64_t rw = static_cast<int64_t>(refine_window_sigmas * static_cast<double>(sigma.nanos())) / bin_ns;
    std::vector<Timestamp> out;
    out.reserve(picks.size());
    for (int64_t p : picks) {
        int64_t lo = std::max<int64_t>(0, p - rw);
        int64_t hi = std::min(n_bins - 1, p + rw);
        double mass = 0.0, moment = 0.0;
        for (int64_t i = lo; i <= hi; ++i) {
            mass += profile.mass[static_cast<size_t>(i)];
            moment += profile.mass[static_cast<size_t>(i)] * static_cast<double>(i);
        }
        double center_bin = mass > 0 ? moment / mass : static_cast<double>(p);
        out.push_back(Timestamp::ns(static_cast<int64_t>(center_bin * static_cast<double>(bin_ns)) +
                                    bin_ns / 2));
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool attack_success(const std::vector<Timestamp>& positions,
                    const std::vector<Timestamp>& truth, Duration sigma,
                    double tolerance_sigmas) {
    require(positions.size() == truth.size(), "attack_success: length mismatch");
    std::vector<Timestamp> p = positions;
    std::vector<Timestamp> t = truth;
    std::sort(p.begin(), p.end());
    std::sort(t.begin(), t.end());
    const double tol = tolerance_sigmas * static_cast<double>(sigma.nanos());
    for (size_t i = 0; i < p.size(); ++i) {
        if (std::abs(static_cast<double>(p[i].nanos() - t[i].nanos())) > tol) return false;
    }
    return true;
}

namespace {

struct RepContext {
    const PasswordAttackParams& params;
    Rng rep_gen;
    std::vector<Timestamp> canonical;
    std::vector<int64_t> counts;
    uint64_t attempt_counter = 0;

    explicit RepContext(const PasswordAttackParams& p, Rng gen)
        : params(p), rep_gen(gen), counts(static_cast<size_t>(p.span.nanos() / p.bin.nanos()), 0) {
        Rng cgen = rep_gen.derive("canonical");
        canonical = canonical_schedule(p, cgen);
    }

    // Averages one freshly drawn N-subset of the repetition's trace pool
    // and tests recovery. Trace j is a pure function of (rep seed, j).
    bool attempt(int n_traces) {
        Rng agen = rep_gen.derive("attempt", attempt_counter++);
        std::fill(counts.begin(), counts.end(), 0);
        const int64_t bin_ns = params.bin.nanos();
        const int64_t n_bins = static_cast<int64_t>(counts.size());

        // partial Fisher-Yates over the pool indices
        std::vector<int32_t> pool(static_cast<size_t>(params.pool_size));
        std::iota(pool.begin(), pool.end(), 0);
        for (int i = 0; i < n_traces; ++i) {
            auto j = static_cast<size_t>(i + static_cast<int>(agen.uniform_below(
                                                  static_cast<uint64_t>(params.pool_size - i))));
            std::swap(pool[static_cast<size_t>(i)], pool[j]);
            Rng tgen = rep_gen.derive("trace", static_cast<uint64_t>(pool[static_cast<size_t>(i)]));
            AlignedTrace tr = simulate_trace(params, canonical, tgen);
            for (Timestamp t : tr.event_times) {
                int64_t b = t.nanos() / bin_ns;
                if (b >= 0 && b < n_bins) counts[static_cast<size_t>(b)]++;
            }
        }

        DensityProfile prof;
        prof.bin = params.bin;
        prof.mass.resize(counts.size());
        const double inv = 1.0 / static_cast<double>(n_traces);
        for (size_t i = 0; i < counts.size(); ++i) prof.mass[i] = static_cast<double>(counts[i]) * inv;

        auto pos = locate_keystrokes(prof, params.n_keys, params.sigma, params.locator_kernel,
                                     params.refine_window_sigmas);
        // the locator cannot resolve below one histogram bin
        Duration tol_sigma = std::max(params.sigma, params.bin);
        return attack_success(pos, canonical, tol_sigma, params.success_tolerance_sigmas);
    }
};

} // namespace

RequiredTracesResult required_traces(const PasswordAttackParams& params, Rng& gen, int reps) {
    require(reps >= 1, "required_traces: reps must be >= 1");
    params.validate();

    RequiredTracesResult res;
    res.per_rep.assign(static_cast<size_t>(reps), 0);
    res.censored.assign(static_cast<size_t>(reps), false);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int r = 0; r < reps; ++r) {
        RepContext ctx(params, gen.derive("rep", static_cast<uint64_t>(r)));

        int n = 1;
        while (n <= params.max_traces && !ctx.attempt(n)) n *= 2;
        if (n > params.max_traces) {
            res.per_rep[static_cast<size_t>(r)] = params.max_traces;
            res.censored[static_cast<size_t>(r)] = true;
            continue;
        }
        int lo = n / 2, hi = n;
        while (hi - lo > std::max(1, lo / 16)) {
            int mid = lo + (hi - lo) / 2;
            int wins = 0;
            for (int k = 0; k < 3; ++k) wins += ctx.attempt(mid) ? 1 : 0;
            if (wins >= 2)
                hi = mid;
            else
                lo = mid;
        }
        res.per_rep[static_cast<size_t>(r)] = hi;
    }

    std::vector<int> sorted = res.per_rep;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0;
    for (int v : res.per_rep) sum += v;
    res.mean = sum / static_cast<double>(reps);
    res.q25 = sorted[static_cast<size_t>(reps) / 4];
    res.median = sorted[static_cast<size_t>(reps) / 2];
    res.q75 = sorted[(static_cast<size_t>(reps) * 3) / 4];
    res.exceeds_threshold = res.mean > static_cast<double>(params.threshold_traces);
    return res;
}

} // namespace ktsim
