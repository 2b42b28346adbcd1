#pragma once

#include <cstdint>
#include <set>

#include "ktsim/events.hpp"
#include "ktsim/rng.hpp"
#include "ktsim/time.hpp"
#include "ktsim/victim.hpp"

namespace ktsim {

enum class Layer : uint8_t { L1, L2, L3 };

/// Fake-keystroke injection settings. With the defaults, one event
/// (real or injected) fires every 10 ms on average: expected rate
/// 2 / (inj_lo + inj_hi) per second, 100/s.
struct DefenseConfig {
    bool enabled = true;
    Duration inj_lo = Duration::ms(0);
    Duration inj_hi = Duration::ms(20);
    Duration handler_delay_max = Duration::us(100);
    std::set<Layer> layers = {Layer::L1, Layer::L2, Layer::L3};

    [[nodiscard]] bool has(Layer l) const { return layers.count(l) > 0; }
    [[nodiscard]] Duration period() const { return (inj_lo + inj_hi) / 2; }
    void validate() const;
};

/// Time-ordered real and fake keystrokes after injection.
struct MergedStream {
    std::vector<KeyEvent> events;
};

/// Runs the injection state machine over the ground truth.
///
/// The recurrent timer fires once per injection period, at a uniformly
/// random offset inside the period, keeping the event interval within
/// [inj_lo, inj_hi]. A real key supersedes the fake of its own period, so
/// the merged density stays uniform regardless of typing. Disabled config
/// passes the real events through untouched.
MergedStream injection_loop(const GroundTruth& truth, const DefenseConfig& cfg,
                            Duration span, Rng& gen);

/// Layer 1: kernel-level footprint for every event, real or fake. Each
/// event raises one keyboard and one timer interrupt (counter ticks
/// included), each delayed by an independent U[0, handler_delay_max], and
/// touches every interrupt-handler cache set. Identical for both kinds.
EmissionList layer1_emissions(const MergedStream& stream, const PipelineModel& pipe,
                              const DefenseConfig& cfg, const CpuClock& clock, Rng& gen);

/// Layer 2: library-level footprint. Every event runs the shared-library
/// path twice (original plus hidden-window duplicate), touching all
/// library cache lines both times.
EmissionList layer2_duplicate(const MergedStream& stream, const PipelineModel& pipe);

/// Layer 3: buffer-level footprint. Every event touches all buffer cache
/// sets. With the layer off, only real events reach the buffer.
EmissionList layer3_touch(const MergedStream& stream, const PipelineModel& pipe);

/// Full defended pipeline: all enabled layers applied to the merged
/// stream. Fake events skip whatever a disabled layer would have added
/// (their unused key codes have no natural footprint); real events keep
/// their natural path.
EmissionList defended_emissions(const MergedStream& stream, const PipelineModel& pipe,
                                const DefenseConfig& cfg, const CpuClock& clock, Rng& gen);

} // namespace ktsim
