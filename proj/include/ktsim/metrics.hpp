#pragma once

#include <cstdint>
#include <vector>

#include "ktsim/rng.hpp"
#include "ktsim/time.hpp"
#include "ktsim/victim.hpp"

namespace ktsim {

/// Detected keystroke timestamps, sorted ascending. Scores, when present,
/// parallel the times (one per detection).
struct DetectionResult {
    std::vector<Timestamp> times;
    std::vector<double> scores;
};

/// Fixed scoring grid: the span is cut into frames (10 ms by default) and
/// detection is judged per frame.
struct FrameGrid {
    Duration frame = Duration::ms(10);
    Duration span = Duration::seconds(60.0);
    int64_t k_real = 0;   // frames containing a real keystroke
    int64_t n_frames = 0; // ceil(span / frame)

    static FrameGrid from_truth(const GroundTruth& truth, Duration span,
                                Duration frame = Duration::ms(10));
    static FrameGrid of(int64_t k_real, int64_t n_frames, Duration frame = Duration::ms(10));
};

struct Metrics {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;
    double advantage_pct = 0.0;
};

/// Harmonic mean of precision and recall; 0 when both are 0.
double fscore(double p, double r);

/// Frame-based scoring: detections and truths map to frame indices,
/// duplicates within a frame collapse, then frames count as TP (both),
/// FP (detection only) or FN (truth only).
Metrics evaluate(const DetectionResult& det, const GroundTruth& truth, const FrameGrid& grid);

/// Baseline that "detects" every frame: tp = k, fp = n - k, F = 2k/(n+k).
Metrics always_one(const FrameGrid& grid);

/// Monte Carlo mean metrics of a Bernoulli(p_guess)-per-frame guesser.
Metrics random_guess(const FrameGrid& grid, double p_guess, Rng& gen, int trials);

/// Advantage over the always-one oracle, in percent.
double advantage(double f, const FrameGrid& grid);

} // namespace ktsim
