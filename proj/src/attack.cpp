#include "ktsim/attack.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "ktsim/kernels.hpp"

namespace ktsim {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_resolved_threshold(const AttackerConfig& cfg) {
    if (cfg.threshold_auto)
        throw std::invalid_argument("attacker threshold is AUTO and no calibration data is present");
}

void sort_and_dedupe(DetectionResult& det) {
    // detections carry no scores in the event-driven attacks; keep times sorted
    std::sort(det.times.begin(), det.times.end());
    det.times.erase(std::unique(det.times.begin(), det.times.end()), det.times.end());
}

} // namespace

void AttackerConfig::validate() const {
    require(probe_interval > Duration::ns(0), "AttackerConfig: probe interval must be positive");
    require(n_sets >= 1, "AttackerConfig: n_sets must be >= 1");
    require(miss_prob >= 0.0 && miss_prob < 1.0, "AttackerConfig: miss_prob must be in [0,1)");
    require(fp_rate >= 0.0, "AttackerConfig: fp_rate must be non-negative");
}

// ---------------------------------------------------------------------------
// Timestamp-delta attack
// ---------------------------------------------------------------------------

DetectionResult rdtsc_attack(const EmissionList& emissions, const AttackerConfig& cfg,
                             const CpuClock& clock, Rng& gen, ProbeTrace* trace) {
    cfg.validate();
    require_resolved_threshold(cfg);

    // Probes run back to back; between interrupts every delta equals the
    // probe interval, far below any useful threshold, so only probe gaps
    // containing interrupt service time are walked explicitly. Interrupts
    // whose service windows touch serialize into one inflated delta.
    DetectionResult det;
    std::vector<std::pair<Timestamp, double>> deltas; // (read completion, delta cycles)

    size_t i = 0;
    const size_t n = emissions.size();
    while (i < n) {
        if (!is_interrupt(emissions[i].channel)) {
            ++i;
            continue;
        }
        Timestamp start = emissions[i].t;
        Timestamp end = start + emissions[i].busy;
        ++i;
        while (i < n) {
            if (!is_interrupt(emissions[i].channel)) {
                ++i;
                continue;
            }
            if (emissions[i].t >= end) break;
            end = end + emissions[i].busy; // queued behind the running handler
            ++i;
        }
        double jitter = 1.0 + gen.uniform(-cfg.probe_jitter_frac, cfg.probe_jitter_frac);
        double probe_ns = static_cast<double>(cfg.probe_interval.nanos()) * jitter;
        Duration delta = Duration::ns(static_cast<int64_t>(probe_ns)) + (end - start);
        double delta_cycles = static_cast<double>(clock.duration_to_cycles(delta));
        if (delta_cycles > cfg.threshold) deltas.emplace_back(end, delta_cycles);
    }

    for (const auto& [t, cycles] : deltas) {
        if (cycles >= static_cast<double>(cfg.band_lo_cycles) &&
            cycles <= static_cast<double>(cfg.band_hi_cycles)) {
            det.times.push_back(t);
            det.scores.push_back(cycles);
        }
    }

    if (trace) {
        // decimated baseline plus every recorded delta, for plotting
        Rng tgen = gen.derive("rdtsc-trace");
        Timestamp horizon = emissions.empty() ? Timestamp::ns(0) : emissions.back().t;
        double base = static_cast<double>(clock.duration_to_cycles(cfg.probe_interval));
        std::vector<std::pair<Timestamp, double>> samples;
        for (int64_t t = 0; t < horizon.nanos(); t += 1000000) {
            double j = 1.0 + tgen.uniform(-cfg.probe_jitter_frac, cfg.probe_jitter_frac);
            samples.emplace_back(Timestamp::ns(t), base * j);
        }
        samples.insert(samples.end(), deltas.begin(), deltas.end());
        std::sort(samples.begin(), samples.end());
        samples.erase(std::unique(samples.begin(), samples.end(),
                                  [](const auto& a, const auto& b) { return a.first == b.first; }),
                      samples.end());
        trace->samples = std::move(samples);
    }
    return det;
}

// ---------------------------------------------------------------------------
// Interrupt-counter attack
// ---------------------------------------------------------------------------

DetectionResult procfs_attack(const EmissionList& emissions, const AttackerConfig& cfg,
                              Rng& gen, ProbeTrace* trace) {
    cfg.validate();

    DetectionResult det;
    Timestamp last = Timestamp::ns(-1);
    for (const auto& e : emissions) {
        if (e.channel != Emission::Channel::TickKeyboard) continue;
        double jitter = 1.0 + gen.uniform(-cfg.probe_jitter_frac, cfg.probe_jitter_frac);
        double probe_ns = static_cast<double>(cfg.probe_interval.nanos()) * jitter;
        Timestamp observed = e.t + Duration::ns(static_cast<int64_t>(gen.uniform() * probe_ns));
        // increments inside one read interval collapse into a single observation
        if (last.nanos() >= 0 && observed.nanos() < last.nanos() + cfg.probe_interval.nanos())
            continue;
        det.times.push_back(observed);
        last = observed;
    }
    sort_and_dedupe(det);

    if (trace) {
        // counter value sampled on a 1 ms grid
        std::vector<std::pair<Timestamp, double>> samples;
        Timestamp horizon = emissions.empty() ? Timestamp::ns(0) : emissions.back().t;
        size_t k = 0;
        std::vector<Timestamp> ticks;
        for (const auto& e : emissions)
            if (e.channel == Emission::Channel::TickKeyboard) ticks.push_back(e.t);
        std::sort(ticks.begin(), ticks.end());
        for (int64_t t = 0; t < horizon.nanos(); t += 1000000) {
            while (k < ticks.size() && ticks[k].nanos() <= t) ++k;
            samples.emplace_back(Timestamp::ns(t), static_cast<double>(k));
        }
        trace->samples = std::move(samples);
    }
    return det;
}

// ---------------------------------------------------------------------------
// Shared-library line probe
// ---------------------------------------------------------------------------

DetectionResult flush_reload_attack(const EmissionList& emissions, uint32_t target,
                                    const std::vector<uint32_t>& universe,
                                    const AttackerConfig& cfg, Duration span, Rng& gen,
                                    ProbeTrace* trace) {
    cfg.validate();
    require(std::find(universe.begin(), universe.end(), target) != universe.end(),
            "flush_reload_attack: target is not a monitored library address");

    DetectionResult det;
    Timestamp last = Timestamp::ns(-1);
    for (const auto& e : emissions) {
        if (e.channel != Emission::Channel::CacheLine || e.id != target) continue;
        if (cfg.miss_prob > 0 && gen.bernoulli(cfg.miss_prob)) continue;
        double jitter = 1.0 + gen.uniform(-cfg.probe_jitter_frac, cfg.probe_jitter_frac);
        double probe_ns = static_cast<double>(cfg.probe_interval.nanos()) * jitter;
        Timestamp observed = e.t + Duration::ns(static_cast<int64_t>(gen.uniform() * probe_ns));
        // the line stays cached until the next flush; one hit per probe window
        if (last.nanos() >= 0 && observed.nanos() < last.nanos() + cfg.probe_interval.nanos())
            continue;
        det.times.push_back(observed);
        last = observed;
    }

    if (cfg.fp_rate > 0) {
        Timestamp t = Timestamp::ns(0);
        for (;;) {
            t = t + gen.exponential_gap(cfg.fp_rate);
            if (t.nanos() >= span.nanos()) break;
            det.times.push_back(t);
        }
    }
    sort_and_dedupe(det);

    if (trace) {
        std::vector<std::pair<Timestamp, double>> samples;
        size_t k = 0;
        for (int64_t t = 0; t < span.nanos(); t += 1000000) {
            double hit = 0.0;
            while (k < det.times.size() && det.times[k].nanos() < t) ++k;
            if (k < det.times.size() && det.times[k].nanos() < t + 1000000) hit = 1.0;
            samples.emplace_back(Timestamp::ns(t), hit);
        }
        trace->samples = std::move(samples);
    }
    return det;
}

// ---------------------------------------------------------------------------
// Multi-set cache probe
// ---------------------------------------------------------------------------

DetectionResult multi_prime_probe_attack(const EmissionList& emissions,
                                         const std::vector<uint32_t>& sets,
                                         const AttackerConfig& cfg, Duration span, Rng& gen,
                                         Duration frame, ProbeTrace* trace) {
    cfg.validate();
    require_resolved_threshold(cfg);
    require(!sets.empty(), "multi_prime_probe_attack: empty set list");
    require(static_cast<int>(sets.size()) == cfg.n_sets,
            "multi_prime_probe_attack: set list does not match n_sets");

    const int64_t probe_ns = cfg.probe_interval.nanos();
    const int64_t n_samples = (span.nanos() + probe_ns - 1) / probe_ns;
    require(n_samples > 0, "multi_prime_probe_attack: empty span");

    std::unordered_map<uint32_t, int> set_index;
    for (size_t s = 0; s < sets.size(); ++s) set_index.emplace(sets[s], static_cast<int>(s));

    // Per-set binary activity, then the summed stream. Probes observe a
    // touch unless missed; several touches of one set within a probe
    // window still count once.
    std::vector<std::vector<uint8_t>> activity(sets.size(),
                                               std::vector<uint8_t>(static_cast<size_t>(n_samples), 0));
    for (const auto& e : emissions) {
        if (e.channel != Emission::Channel::CacheSet) continue;
        auto it = set_index.find(e.id);
        if (it == set_index.end()) continue;
        int64_t idx = e.t.nanos() / probe_ns;
        if (idx < 0 || idx >= n_samples) continue;
        if (cfg.miss_prob > 0 && gen.bernoulli(cfg.miss_prob)) continue;
        activity[static_cast<size_t>(it->second)][static_cast<size_t>(idx)] = 1;
    }
    if (cfg.fp_rate > 0) {
        for (auto& act : activity) {
            Timestamp t = Timestamp::ns(0);
            for (;;) {
                t = t + gen.exponential_gap(cfg.fp_rate);
                if (t.nanos() >= span.nanos()) break;
                act[static_cast<size_t>(t.nanos() / probe_ns)] = 1;
            }
        }
    }

    std::vector<uint16_t> summed(static_cast<size_t>(n_samples), 0);
    for (const auto& act : activity)
        for (int64_t i = 0; i < n_samples; ++i) summed[static_cast<size_t>(i)] += act[static_cast<size_t>(i)];

    int window = static_cast<int>(cfg.smooth_window.nanos() / probe_ns);
    if (window < 1) window = 1;
    if (window % 2 == 0) ++window;
    std::vector<int32_t> winsum = kernels::windowed_sum(summed, window);

    // smoothed mean = winsum / window; peaks are plateau-center local
    // maxima above threshold, suppressed to at most one per frame
    const double thr_sum = cfg.threshold * static_cast<double>(window);
    const int64_t frame_ns = frame.nanos();

    std::vector<std::pair<int64_t, int32_t>> peaks; // (sample index, height)
    {
        int64_t i = 0;
        while (i < n_samples) {
            int64_t j = i;
            while (j + 1 < n_samples &&
                   winsum[static_cast<size_t>(j + 1)] == winsum[static_cast<size_t>(i)])
                ++j;
            int32_t v = winsum[static_cast<size_t>(i)];
            int32_t left = i > 0 ? winsum[static_cast<size_t>(i - 1)] : INT32_MIN;
            int32_t right = j + 1 < n_samples ? winsum[static_cast<size_t>(j + 1)] : INT32_MIN;
            if (v > left && v > right && static_cast<double>(v) > thr_sum)
                peaks.emplace_back((i + j) / 2, v);
            i = j + 1;
        }
    }

    DetectionResult det;
    int64_t cur_frame = -1;
    int32_t cur_best = 0;
    int64_t cur_idx = -1;
    auto flush = [&] {
        if (cur_idx >= 0) {
            det.times.push_back(Timestamp::ns(cur_idx * probe_ns));
            det.scores.push_back(static_cast<double>(cur_best) / static_cast<double>(window));
        }
    };
    for (const auto& [idx, v] : peaks) {
        int64_t f = (idx * probe_ns) / frame_ns;
        if (f != cur_frame) {
            flush();
            cur_frame = f;
            cur_best = v;
            cur_idx = idx;
        } else if (v > cur_best) {
            cur_best = v;
            cur_idx = idx;
        }
    }
    flush();

    if (trace) {
        trace->samples.clear();
        trace->samples.reserve(static_cast<size_t>(n_samples));
        for (int64_t s = 0; s < n_samples; ++s)
            trace->samples.emplace_back(Timestamp::ns(s * probe_ns),
                                        static_cast<double>(winsum[static_cast<size_t>(s)]) /
                                            static_cast<double>(window));
    }
    return det;
}

// ---------------------------------------------------------------------------
// Best threshold distinguisher
// ---------------------------------------------------------------------------

double best_threshold(const ProbeTrace& scores, const GroundTruth& truth, Duration frame) {
    require(!scores.samples.empty(), "best_threshold: empty score trace");
    require(!truth.empty(), "best_threshold: needs at least one real keystroke");

    std::vector<int64_t> truth_frames;
    for (Timestamp t : truth) truth_frames.push_back(t.nanos() / frame.nanos());
    std::sort(truth_frames.begin(), truth_frames.end());
    truth_frames.erase(std::unique(truth_frames.begin(), truth_frames.end()), truth_frames.end());
    std::unordered_map<int64_t, bool> is_truth;
    for (int64_t f : truth_frames) is_truth[f] = true;

    // Sweep thresholds from high to low; samples enter in descending value
    // order and the per-frame detection counts update incrementally.
    std::vector<std::pair<double, int64_t>> by_value; // (value, frame)
    for (const auto& [t, v] : scores.samples) by_value.emplace_back(v, t.nanos() / frame.nanos());
    std::sort(by_value.begin(), by_value.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    std::unordered_map<int64_t, int> det_count;
    int64_t tp = 0, fp = 0;
    const int64_t total_truth = static_cast<int64_t>(truth_frames.size());

    // the all-exclusive threshold is a valid starting candidate (F = 0)
    double best_f = 0.0;
    double best_thr = by_value.front().first + 1.0;

    size_t i = 0;
    while (i < by_value.size()) {
        double v = by_value[i].first;
        // admit every sample with this value
        while (i < by_value.size() && by_value[i].first == v) {
            int64_t f = by_value[i].second;
            if (det_count[f]++ == 0) {
                if (is_truth.count(f))
                    ++tp;
                else
                    ++fp;
            }
            ++i;
        }
        // threshold candidate: midpoint below v (or just under the minimum)
        double thr = (i < by_value.size()) ? (v + by_value[i].first) / 2.0 : v - 1.0;
        double p = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double r = static_cast<double>(tp) / static_cast<double>(total_truth);
        double f1 = fscore(p, r);
        if (f1 > best_f) { // strict: ties keep the higher threshold
            best_f = f1;
            best_thr = thr;
        }
    }
    return best_thr;
}

} // namespace ktsim
