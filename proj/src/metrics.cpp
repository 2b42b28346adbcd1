#include "ktsim/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace ktsim {

namespace {

std::vector<int64_t> frame_indices(const std::vector<Timestamp>& times, Duration frame) {
    std::vector<int64_t> idx;
    idx.reserve(times.size());
    for (Timestamp t : times) idx.push_back(t.nanos() / frame.nanos());
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

Metrics from_counts(int64_t tp, int64_t fp, int64_t fn, const FrameGrid& grid) {
    Metrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.fscore = fscore(m.precision, m.recall);
    m.advantage_pct = grid.k_real >= 1 ? advantage(m.fscore, grid) : 0.0;
    return m;
}

} // namespace

FrameGrid FrameGrid::from_truth(const GroundTruth& truth, Duration span, Duration frame) {
    if (frame <= Duration::ns(0)) throw std::invalid_argument("FrameGrid: frame must be positive");
    FrameGrid g;
    g.frame = frame;
    g.span = span;
    g.n_frames = (span.nanos() + frame.nanos() - 1) / frame.nanos();
    g.k_real = static_cast<int64_t>(frame_indices(truth, frame).size());
    return g;
}

FrameGrid FrameGrid::of(int64_t k_real, int64_t n_frames, Duration frame) {
    if (k_real < 0 || n_frames < k_real) throw std::invalid_argument("FrameGrid: need 0 <= k <= n");
    FrameGrid g;
    g.frame = frame;
    g.span = Duration::ns(frame.nanos() * n_frames);
    g.k_real = k_real;
    g.n_frames = n_frames;
    return g;
}

double fscore(double p, double r) {
    if (p < 0 || p > 1 || r < 0 || r > 1) throw std::invalid_argument("fscore: p, r must be in [0,1]");
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

Metrics evaluate(const DetectionResult& det, const GroundTruth& truth, const FrameGrid& grid) {
    auto det_frames = frame_indices(det.times, grid.frame);
    auto truth_frames = frame_indices(truth, grid.frame);

    int64_t tp = 0;
    size_t i = 0, j = 0;
    while (i < det_frames.size() && j < truth_frames.size()) {
        if (det_frames[i] == truth_frames[j]) {
            ++tp;
            ++i;
            ++j;
        } else if (det_frames[i] < truth_frames[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    int64_t fp = static_cast<int64_t>(det_frames.size()) - tp;
    int64_t fn = static_cast<int64_t>(truth_frames.size()) - tp;
    return from_counts(tp, fp, fn, grid);
}

Metrics always_one(const FrameGrid& grid) {
    if (grid.k_real < 1)
        throw std::invalid_argument("always_one: undefined precision with no real frames");
    return from_counts(grid.k_real, grid.n_frames - grid.k_real, 0, grid);
}

Metrics random_guess(const FrameGrid& grid, double p_guess, Rng& gen, int trials) {
    if (p_guess < 0 || p_guess > 1) throw std::invalid_argument("random_guess: p out of range");
    if (trials <= 0) throw std::invalid_argument("random_guess: trials must be positive");

    Metrics acc;
    double sp = 0, sr = 0, sf = 0, sa = 0;
    for (int t = 0; t < trials; ++t) {
        int64_t tp = 0, fp = 0;
        for (int64_t f = 0; f < grid.n_frames; ++f) {
            if (!gen.bernoulli(p_guess)) continue;
            if (f < grid.k_real) // truth frames are exchangeable; use the first k
                ++tp;
            else
                ++fp;
        }
        Metrics m = from_counts(tp, fp, grid.k_real - tp, grid);
        acc.tp += m.tp;
        acc.fp += m.fp;
        acc.fn += m.fn;
        sp += m.precision;
        sr += m.recall;
        sf += m.fscore;
        sa += m.advantage_pct;
    }
    acc.tp /= trials;
    acc.fp /= trials;
    acc.fn /= trials;
    acc.precision = sp / trials;
    acc.recall = sr / trials;
    acc.fscore = sf / trials;
    acc.advantage_pct = sa / trials;
    return acc;
}

double advantage(double f, const FrameGrid& grid) {
    if (grid.k_real < 1) throw std::invalid_argument("advantage: needs at least one real frame");
    // (f / (2k/(n+k)) - 1) * 100, written so the ratio stays exact for
    // representable inputs (575.0 for f = 1 on the 8-in-100 grid).
    double baseline_inv = static_cast<double>(grid.n_frames + grid.k_real) /
                          static_cast<double>(2 * grid.k_real);
    return (f * baseline_inv - 1.0) * 100.0;
}

} // namespace ktsim
