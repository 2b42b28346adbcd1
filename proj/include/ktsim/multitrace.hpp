#pragma once

#include <cstdint>
#include <vector>

#include "ktsim/defense.hpp"
#include "ktsim/rng.hpp"
#include "ktsim/time.hpp"

namespace ktsim {

/// Parameters of the repeated-password attacker model: noise-free traces,
/// perfect re-alignment (per-key variance stays sigma), known key count.
struct PasswordAttackParams {
    int n_keys = 8;
    Duration span = Duration::seconds(2.0);
    Duration sigma = Duration::ms(40);
    DefenseConfig defense;
    Duration bin = Duration::ms(1);
    int threshold_traces = 1825;

    // locator settings, calibrated once and frozen
    Duration locator_kernel = Duration::us(500);
    double refine_window_sigmas = 1.0;
    double success_tolerance_sigmas = 1.0;

    // minimal-trace search bounds
    int max_traces = 65536;
    int pool_size = 131072;

    void validate() const;
};

/// One recording of one password entry: real and fake keystrokes,
/// unlabeled, relative to the trace start.
struct AlignedTrace {
    std::vector<Timestamp> event_times;
};

/// Per-bin accumulation over [0, span), divided by the trace count.
struct DensityProfile {
    Duration bin{};
    std::vector<double> mass;
};

/// The experiment's fixed key schedule (the password's rhythm).
std::vector<Timestamp> canonical_schedule(const PasswordAttackParams& params, Rng& gen);

/// One trace: canonical keys each perturbed by a truncated Gaussian of std
/// sigma, merged with an independent stationary fake train at the
/// defense's injection rate (when enabled).
AlignedTrace simulate_trace(const PasswordAttackParams& params,
                            const std::vector<Timestamp>& canonical, Rng& gen);

/// Batch helper: n_traces traces plus the canonical truth they perturb.
std::pair<std::vector<AlignedTrace>, std::vector<Timestamp>>
simulate_password_traces(const PasswordAttackParams& params, int n_traces, Rng& gen);

/// Histogram of all event times divided by the trace count.
DensityProfile average_aligned(const std::vector<AlignedTrace>& traces, Duration bin,
                               Duration span);

/// Cross-correlates the profile with a Gaussian kernel, greedily picks the
/// n_keys strongest peaks with a 2*sigma suppression radius, then refines
/// each pick by the local first moment of the raw profile. kernel_std of
/// zero means "use sigma".
std::vector<Timestamp> locate_keystrokes(const DensityProfile& profile, int n_keys,
                                         Duration sigma, Duration kernel_std = Duration::ns(0),
                                         double refine_window_sigmas = 1.0);

/// True iff the order-preserving one-to-one matching puts every position
/// within tolerance_sigmas * sigma of its key.
bool attack_success(const std::vector<Timestamp>& positions,
                    const std::vector<Timestamp>& truth, Duration sigma,
                    double tolerance_sigmas = 1.0);

struct RequiredTracesResult {
    std::vector<int> per_rep;        // minimal trace count per repetition
    std::vector<bool> censored;      // true when the search hit max_traces
    double mean = 0.0;
    int q25 = 0, median = 0, q75 = 0;
    bool exceeds_threshold = false;  // mean > threshold_traces
};

/// Per repetition, finds the minimal N whose averaged subset recovers all
/// key positions: doubling until the first success, then bisection where
/// each probe re-draws subsets and takes a majority of 3. Repetitions run
/// in parallel with derived seeds; results keep repetition order.
RequiredTracesResult required_traces(const PasswordAttackParams& params, Rng& gen, int reps);

} // namespace ktsim
