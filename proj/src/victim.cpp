#include "ktsim/victim.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace ktsim {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

bool disjoint(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    std::unordered_set<uint32_t> s(a.begin(), a.end());
    for (uint32_t x : b)
        if (s.count(x)) return false;
    return true;
}

Duration jittered_cost(const CpuClock& clock, int64_t cycles, double jitter_frac, Rng& gen) {
    double f = 1.0 + gen.uniform(-jitter_frac, jitter_frac);
    return clock.cycles_to_duration(static_cast<int64_t>(static_cast<double>(cycles) * f));
}

} // namespace

void PipelineModel::validate() const {
    require(isr_cycles > 0 && other_irq_cycles > 0 && timer_isr_cycles > 0,
            "PipelineModel: interrupt costs must be positive");
    require(isr_cycles < other_irq_cycles,
            "PipelineModel: keyboard ISR cost must stay below the rescheduling class");
    require(short_irq_lo_cycles > 0 && short_irq_lo_cycles <= short_irq_hi_cycles,
            "PipelineModel: short interrupt cost range is inverted");
    require(!lib_addresses.empty() && !buffer_sets.empty() && !kernel_sets.empty(),
            "PipelineModel: cache id lists must be non-empty");
    require(disjoint(lib_addresses, buffer_sets) && disjoint(lib_addresses, kernel_sets) &&
                disjoint(buffer_sets, kernel_sets),
            "PipelineModel: cache id lists must be pairwise disjoint");
    require(other_irq_rate >= 0 && short_irq_rate >= 0 && cache_noise_rate >= 0,
            "PipelineModel: noise rates must be non-negative");
}

GroundTruth generate_typing(const TypingModel& model, Duration span, Rng& gen) {
    require(span > Duration::ns(0), "generate_typing: span must be positive");
    require(model.mean_interval > Duration::ns(0), "generate_typing: mean interval must be positive");
    require(model.sigma >= Duration::ns(0), "generate_typing: sigma must be non-negative");

    GroundTruth out;
    const Duration min_gap = Duration::ns(1); // keeps the sequence strictly increasing

    if (model.mode == TypingModel::Mode::FreeText) {
        Timestamp t = Timestamp::ns(0);
        for (;;) {
            t = t + gen.gaussian_duration(model.mean_interval, model.sigma, min_gap);
            if (t.nanos() >= span.nanos()) break;
            out.push_back(t);
        }
        return out;
    }

    // fixed-count: n keystrokes with typing-model gaps, centered in the span
    int n = model.count;
    require(n >= 1, "generate_typing: fixed-count needs count >= 1");
    int64_t needed = model.mean_interval.nanos() * (n - 1);
    if (model.sigma.nanos() == 0 && needed >= span.nanos())
        throw std::invalid_argument("generate_typing: count impossible within span at sigma=0");

    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<Duration> gaps(static_cast<size_t>(std::max(0, n - 1)));
        int64_t total = 0;
        for (auto& g : gaps) {
            g = gen.gaussian_duration(model.mean_interval, model.sigma, min_gap);
            total += g.nanos();
        }
        if (total >= span.nanos()) continue;
        Timestamp t = Timestamp::ns((span.nanos() - total) / 2);
        out.clear();
        out.push_back(t);
        for (const auto& g : gaps) {
            t = t + g;
            out.push_back(t);
        }
        if (out.back().nanos() < span.nanos()) return out;
    }
    throw std::invalid_argument("generate_typing: count does not fit within span");
}

EmissionList process_event(const KeyEvent& event, const PipelineModel& pipe,
                           const CpuClock& clock, Rng& gen, int32_t source) {
    EmissionList out;
    out.reserve(2 + pipe.lib_addresses.size() + pipe.kernel_sets.size() + pipe.buffer_sets.size());
    Duration busy = jittered_cost(clock, pipe.isr_cycles, pipe.isr_jitter_frac, gen);
    out.push_back({event.t, Emission::Channel::IrqKeyboard, 0, busy, source});
    out.push_back({event.t, Emission::Channel::TickKeyboard, 0, Duration::ns(0), source});
    for (uint32_t id : pipe.lib_addresses)
        out.push_back({event.t, Emission::Channel::CacheLine, id, Duration::ns(0), source});
    for (uint32_t id : pipe.kernel_sets)
        out.push_back({event.t, Emission::Channel::CacheSet, id, Duration::ns(0), source});
    for (uint32_t id : pipe.buffer_sets)
        out.push_back({event.t, Emission::Channel::CacheSet, id, Duration::ns(0), source});
    return out;
}

EmissionList inject_background(const PipelineModel& pipe, Duration span,
                               const CpuClock& clock, Rng& gen) {
    EmissionList out;

    if (pipe.other_irq_rate > 0) {
        Timestamp t = Timestamp::ns(0);
        for (;;) {
            t = t + gen.exponential_gap(pipe.other_irq_rate);
            if (t.nanos() >= span.nanos()) break;
            Duration busy = jittered_cost(clock, pipe.other_irq_cycles, pipe.isr_jitter_frac, gen);
            out.push_back({t, Emission::Channel::IrqOther, 0, busy, -1});
            out.push_back({t, Emission::Channel::TickOther, 0, Duration::ns(0), -1});
        }
    }

    if (pipe.short_irq_rate > 0) {
        Timestamp t = Timestamp::ns(0);
        for (;;) {
            t = t + gen.exponential_gap(pipe.short_irq_rate);
            if (t.nanos() >= span.nanos()) break;
            int64_t cycles = pipe.short_irq_lo_cycles +
                             static_cast<int64_t>(gen.uniform_below(static_cast<uint64_t>(
                                 pipe.short_irq_hi_cycles - pipe.short_irq_lo_cycles + 1)));
            out.push_back({t, Emission::Channel::IrqOther, 0, clock.cycles_to_duration(cycles), -1});
            out.push_back({t, Emission::Channel::TickOther, 0, Duration::ns(0), -1});
        }
    }

    // Cache noise: other processes' traffic on the monitored set groups.
    // One Poisson cluster stream per group; a cluster touches each set of
    // its group independently.
    if (pipe.cache_noise_rate > 0 && pipe.cache_noise_prob > 0) {
        for (const auto* group : {&pipe.kernel_sets, &pipe.buffer_sets}) {
            Timestamp t = Timestamp::ns(0);
            for (;;) {
                t = t + gen.exponential_gap(pipe.cache_noise_rate);
                if (t.nanos() >= span.nanos()) break;
                for (uint32_t id : *group)
                    if (gen.bernoulli(pipe.cache_noise_prob))
                        out.push_back({t, Emission::Channel::CacheSet, id, Duration::ns(0), -1});
            }
        }
    }

    return out;
}

} // namespace ktsim
