#include "ktsim/defense.hpp"

#include <algorithm>
#include <stdexcept>

#include "ktsim/event_queue.hpp"

namespace ktsim {

void DefenseConfig::validate() const {
    if (inj_lo > inj_hi) throw std::invalid_argument("DefenseConfig: inj_lo > inj_hi");
    if (inj_lo + inj_hi <= Duration::ns(0))
        throw std::invalid_argument("DefenseConfig: injection interval must be positive");
    if (handler_delay_max < Duration::ns(0))
        throw std::invalid_argument("DefenseConfig: handler delay must be non-negative");
}

MergedStream injection_loop(const GroundTruth& truth, const DefenseConfig& cfg,
                            Duration span, Rng& gen) {
    cfg.validate();
    MergedStream out;
    if (!cfg.enabled) {
        out.events.reserve(truth.size());
        for (Timestamp t : truth) out.events.push_back({t, KeyEvent::Kind::Real, 0});
        return out;
    }

    // One firing per period at offset U[inj_lo/2, inj_hi/2): consecutive
    // gaps stay within [inj_lo, inj_hi] with mean (inj_lo + inj_hi)/2.
    const Duration period = cfg.period();
    const Duration off_lo = cfg.inj_lo / 2;
    const Duration off_hi = Duration::ns(std::max(cfg.inj_lo.nanos() / 2, cfg.inj_hi.nanos() / 2 - 1));
    const int64_t n_slots = span.nanos() / period.nanos();

    EventQueue<KeyEvent> queue;
    size_t next_real = 0;
    for (int64_t k = 0; k < n_slots; ++k) {
        const int64_t slot_start = k * period.nanos();
        const int64_t slot_end = slot_start + period.nanos();
        Timestamp fake = Timestamp::ns(slot_start) + gen.uniform_duration(off_lo, off_hi);
        bool has_real = false;
        while (next_real < truth.size() && truth[next_real].nanos() < slot_end) {
            Timestamp t = truth[next_real++];
            queue.push(t, {t, KeyEvent::Kind::Real, 0});
            has_real = true;
        }
        // The timer restarts on every event; a slot that carried a real
        // keystroke contributes no fake, keeping the density uniform.
        if (!has_real) queue.push(fake, {fake, KeyEvent::Kind::Fake, kFakeKeyCode});
    }
    while (next_real < truth.size()) {
        Timestamp t = truth[next_real++];
        queue.push(t, {t, KeyEvent::Kind::Real, 0});
    }
    out.events.reserve(queue.size());
    while (auto e = queue.pop()) out.events.push_back(e->second);
    return out;
}

EmissionList layer1_emissions(const MergedStream& stream, const PipelineModel& pipe,
                              const DefenseConfig& cfg, const CpuClock& clock, Rng& gen) {
    EmissionList out;
    out.reserve(stream.events.size() * (4 + pipe.kernel_sets.size()));
    const Duration zero = Duration::ns(0);
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const KeyEvent& ev = stream.events[i];
        const auto src = static_cast<int32_t>(i);
        Duration d_kbd = gen.uniform_duration(zero, cfg.handler_delay_max);
        Duration d_tmr = gen.uniform_duration(zero, cfg.handler_delay_max);
        double jitter = 1.0 + gen.uniform(-pipe.isr_jitter_frac, pipe.isr_jitter_frac);
        Duration kbd_busy = clock.cycles_to_duration(
            static_cast<int64_t>(static_cast<double>(pipe.isr_cycles) * jitter));
        jitter = 1.0 + gen.uniform(-pipe.isr_jitter_frac, pipe.isr_jitter_frac);
        Duration tmr_busy = clock.cycles_to_duration(
            static_cast<int64_t>(static_cast<double>(pipe.timer_isr_cycles) * jitter));

        // counters tick at interrupt arrival; the handler delay applies to
        // the service window only
        Timestamp t_kbd = ev.t + d_kbd;
        Timestamp t_tmr = ev.t + d_tmr;
        out.push_back({t_kbd, Emission::Channel::IrqKeyboard, 0, kbd_busy, src});
        out.push_back({ev.t, Emission::Channel::TickKeyboard, 0, zero, src});
        out.push_back({t_tmr, Emission::Channel::IrqTimer, 0, tmr_busy, src});
        out.push_back({ev.t, Emission::Channel::TickTimer, 0, zero, src});
        for (uint32_t id : pipe.kernel_sets)
            out.push_back({t_kbd, Emission::Channel::CacheSet, id, zero, src});
    }
    return out;
}

EmissionList layer2_duplicate(const MergedStream& stream, const PipelineModel& pipe) {
    EmissionList out;
    out.reserve(stream.events.size() * pipe.lib_addresses.size() * 2);
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const KeyEvent& ev = stream.events[i];
        const auto src = static_cast<int32_t>(i);
        // original path plus the hidden-window duplicate
        for (int pass = 0; pass < 2; ++pass)
            for (uint32_t id : pipe.lib_addresses)
                out.push_back({ev.t, Emission::Channel::CacheLine, id, Duration::ns(0), src});
    }
    return out;
}

EmissionList layer3_touch(const MergedStream& stream, const PipelineModel& pipe) {
    EmissionList out;
    out.reserve(stream.events.size() * pipe.buffer_sets.size());
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const KeyEvent& ev = stream.events[i];
        const auto src = static_cast<int32_t>(i);
        for (uint32_t id : pipe.buffer_sets)
            out.push_back({ev.t, Emission::Channel::CacheSet, id, Duration::ns(0), src});
    }
    return out;
}

EmissionList defended_emissions(const MergedStream& stream, const PipelineModel& pipe,
                                const DefenseConfig& cfg, const CpuClock& clock, Rng& gen) {
    EmissionList out;
    if (cfg.has(Layer::L1)) {
        out = layer1_emissions(stream, pipe, cfg, clock, gen);
    } else {
        // Without layer 1 fakes are never injected into the kernel path;
        // real events keep their natural interrupt footprint.
        for (size_t i = 0; i < stream.events.size(); ++i) {
            const KeyEvent& ev = stream.events[i];
            if (ev.kind != KeyEvent::Kind::Real) continue;
            auto ems = process_event(ev, pipe, clock, gen, static_cast<int32_t>(i));
            // keep only the kernel-layer part; libraries and buffers are L2/L3 concerns
            for (const auto& e : ems)
                if (e.channel == Emission::Channel::IrqKeyboard ||
                    e.channel == Emission::Channel::TickKeyboard ||
                    (e.channel == Emission::Channel::CacheSet &&
                     std::find(pipe.kernel_sets.begin(), pipe.kernel_sets.end(), e.id) !=
                         pipe.kernel_sets.end()))
                    out.push_back(e);
        }
    }

    if (cfg.has(Layer::L2)) {
        auto lib = layer2_duplicate(stream, pipe);
        out.insert(out.end(), lib.begin(), lib.end());
    } else {
        for (size_t i = 0; i < stream.events.size(); ++i) {
            const KeyEvent& ev = stream.events[i];
            if (ev.kind != KeyEvent::Kind::Real) continue; // fakes have no library footprint
            for (uint32_t id : pipe.lib_addresses)
                out.push_back({ev.t, Emission::Channel::CacheLine, id, Duration::ns(0),
                               static_cast<int32_t>(i)});
        }
    }

    if (cfg.has(Layer::L3)) {
        auto buf = layer3_touch(stream, pipe);
        out.insert(out.end(), buf.begin(), buf.end());
    } else {
        for (size_t i = 0; i < stream.events.size(); ++i) {
            const KeyEvent& ev = stream.events[i];
            if (ev.kind != KeyEvent::Kind::Real) continue; // real input always updates the buffer
            for (uint32_t id : pipe.buffer_sets)
                out.push_back({ev.t, Emission::Channel::CacheSet, id, Duration::ns(0),
                               static_cast<int32_t>(i)});
        }
    }
    return out;
}

} // namespace ktsim
