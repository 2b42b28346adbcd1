#pragma once

#include <cstdint>
#include <vector>

#include "ktsim/events.hpp"
#include "ktsim/metrics.hpp"
#include "ktsim/rng.hpp"
#include "ktsim/time.hpp"
#include "ktsim/victim.hpp"

namespace ktsim {

/// Time-ordered attacker samples (timestamp, measured value).
struct ProbeTrace {
    std::vector<std::pair<Timestamp, double>> samples;
};

/// Probe loop settings shared by the attackers. Threshold units depend on
/// the attack: cycles for the timestamp-delta attack, smoothed activity
/// for the cache-set attack.
struct AttackerConfig {
    Duration probe_interval = Duration::ns(40); // ~95 cycles at 2.4 GHz
    double threshold = 0.0;
    bool threshold_auto = false; // requires calibration; attacks reject it unresolved
    int n_sets = 5;
    Duration smooth_window = Duration::us(500);
    double miss_prob = 0.0;
    double fp_rate = 0.0; // spurious detections per second
    double probe_jitter_frac = 0.10;

    // delta classification band for the timestamp attack, in cycles;
    // deltas inside count as keystrokes, larger ones as other interrupts
    int64_t band_lo_cycles = 30000;
    int64_t band_hi_cycles = 107500;

    void validate() const;
};

/// Timestamp-delta attack: back-to-back counter reads, a gap inflated by
/// ISR service time records an event; deltas near the keyboard-ISR cost
/// classify as keystrokes. Emissions must be time-sorted.
DetectionResult rdtsc_attack(const EmissionList& emissions, const AttackerConfig& cfg,
                             const CpuClock& clock, Rng& gen, ProbeTrace* trace = nullptr);

/// Interrupt-counter attack: samples the per-kind counters every probe
/// interval and reports each observed keyboard-counter increment.
DetectionResult procfs_attack(const EmissionList& emissions, const AttackerConfig& cfg,
                              Rng& gen, ProbeTrace* trace = nullptr);

/// Shared-library line probe: flush, wait one probe interval, reload. A
/// fast reload means the line was touched. Subject to miss_prob and
/// spurious hits at fp_rate.
DetectionResult flush_reload_attack(const EmissionList& emissions, uint32_t target,
                                    const std::vector<uint32_t>& universe,
                                    const AttackerConfig& cfg, Duration span, Rng& gen,
                                    ProbeTrace* trace = nullptr);

/// Simultaneous cache-set probes: per-set binary activity streams are
/// summed, smoothed with a centered sliding window, and frames whose peak
/// exceeds the threshold become detections (one per frame at most).
DetectionResult multi_prime_probe_attack(const EmissionList& emissions,
                                         const std::vector<uint32_t>& sets,
                                         const AttackerConfig& cfg, Duration span, Rng& gen,
                                         Duration frame = Duration::ms(10),
                                         ProbeTrace* trace = nullptr);

/// Sweeps candidate thresholds (midpoints between distinct score values)
/// and returns the one maximizing the frame-based F-score; ties break
/// toward the higher threshold.
double best_threshold(const ProbeTrace& scores, const GroundTruth& truth, Duration frame);

} // namespace ktsim
