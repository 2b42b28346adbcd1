#pragma once

#include <cstdint>
#include <vector>

#include "ktsim/events.hpp"
#include "ktsim/rng.hpp"
#include "ktsim/time.hpp"

namespace ktsim {

/// Inter-keystroke interval model. Free-text emits keystrokes until the
/// span ends; fixed-count spreads exactly `count` keystrokes over the span.
struct TypingModel {
    enum class Mode : uint8_t { FreeText, FixedCount } mode = Mode::FreeText;
    Duration mean_interval = Duration::ms(125); // 8 keystrokes per second
    Duration sigma = Duration::ms(30);
    int count = 0; // fixed-count mode only
};

/// Real-keystroke ground truth: strictly increasing timestamps.
using GroundTruth = std::vector<Timestamp>;

/// Per-layer side-channel footprint of the keystroke pipeline plus the
/// background noise environment. All constants come from scenario presets.
struct PipelineModel {
    // interrupt service costs, in CPU cycles
    int64_t isr_cycles = 60000;        // keyboard ISR class
    int64_t timer_isr_cycles = 18000;  // injection timer class
    int64_t other_irq_cycles = 155000; // rescheduling class
    double isr_jitter_frac = 0.05;     // +-5% per-interrupt cost jitter

    // background interrupts
    double other_irq_rate = 4.0;       // rescheduling interrupts per second
    double short_irq_rate = 1.0;       // misc short I/O interrupts per second
    int64_t short_irq_lo_cycles = 35000;
    int64_t short_irq_hi_cycles = 95000;

    // cache footprint per keystroke
    std::vector<uint32_t> lib_addresses; // shared-library lines touched per key
    std::vector<uint32_t> buffer_sets;   // input-field buffer sets
    std::vector<uint32_t> kernel_sets;   // interrupt-handler sets

    // cache noise on attacker-monitored sets
    double cache_noise_rate = 6.0;  // noise clusters per second per set group
    double cache_noise_prob = 0.55; // per-set touch probability within a cluster

    void validate() const;
};

/// Keystroke times for the given model. Strictly increasing, within [0, span).
GroundTruth generate_typing(const TypingModel& model, Duration span, Rng& gen);

/// Emissions of one undefended keystroke: keyboard interrupt (ISR cost),
/// counter tick, one cache-line touch per library address, one cache-set
/// touch per kernel and buffer set.
EmissionList process_event(const KeyEvent& event, const PipelineModel& pipe,
                           const CpuClock& clock, Rng& gen, int32_t source = -1);

/// Background environment over [0, span): Poisson rescheduling interrupts,
/// short I/O interrupts, and cache-noise clusters on monitored sets.
EmissionList inject_background(const PipelineModel& pipe, Duration span,
                               const CpuClock& clock, Rng& gen);

} // namespace ktsim
