#include <doctest.h>

#include <cmath>
#include <set>

#include "ktsim/victim.hpp"

using namespace ktsim;

namespace {

PipelineModel test_pipe() {
    PipelineModel p;
    p.lib_addresses = {1101, 1102, 1103};
    p.buffer_sets = {2201, 2202, 2203, 2204, 2205};
    p.kernel_sets = {3301, 3302, 3303, 3304, 3305};
    return p;
}

} // namespace

TEST_CASE("fixed-count typing returns exactly the requested keystrokes") {
    Rng gen(1);
    TypingModel m{TypingModel::Mode::FixedCount, Duration::ms(170), Duration::ms(40), 8};
    auto truth = generate_typing(m, Duration::seconds(2.0), gen);
    REQUIRE(truth.size() == 8);
    for (size_t i = 0; i < truth.size(); ++i) {
        CHECK(truth[i].nanos() >= 0);
        CHECK(truth[i].nanos() < 2'000'000'000);
        if (i > 0) CHECK(truth[i] > truth[i - 1]);
    }
}

TEST_CASE("fixed-count typing rejects impossible schedules at zero sigma") {
    Rng gen(1);
    TypingModel m{TypingModel::Mode::FixedCount, Duration::ms(300), Duration::ms(0), 8};
    CHECK_THROWS_AS(generate_typing(m, Duration::seconds(2.0), gen), std::invalid_argument);
}

TEST_CASE("free-text typing at zero sigma is perfectly periodic") {
    Rng gen(5);
    TypingModel m{TypingModel::Mode::FreeText, Duration::ms(170), Duration::ms(0), 0};
    auto truth = generate_typing(m, Duration::seconds(3.0), gen);
    REQUIRE(truth.size() > 10);
    for (size_t i = 1; i < truth.size(); ++i)
        CHECK((truth[i] - truth[i - 1]).nanos() == 170'000'000);
}

TEST_CASE("trained-typist preset stays inside the reported interval range") {
    Rng gen(9);
    TypingModel m{TypingModel::Mode::FreeText, Duration::ms(170), Duration::ms(40), 0};
    auto truth = generate_typing(m, Duration::seconds(60.0), gen);
    double sum = 0;
    for (size_t i = 1; i < truth.size(); ++i)
        sum += static_cast<double>((truth[i] - truth[i - 1]).nanos());
    double mean_ms = sum / static_cast<double>(truth.size() - 1) / 1e6;
    CHECK(mean_ms >= 125.0);
    CHECK(mean_ms <= 215.0);
}

TEST_CASE("keystroke rate sanity across seeded trials") {
    // 8/s free text over 60 s: average count near 480 across 100 trials
    double total = 0;
    for (uint64_t s = 0; s < 100; ++s) {
        Rng gen(s);
        TypingModel m{TypingModel::Mode::FreeText, Duration::ms(125), Duration::ms(30), 0};
        total += static_cast<double>(generate_typing(m, Duration::seconds(60.0), gen).size());
    }
    double mean = total / 100.0;
    CHECK(mean > 480 - 3 * std::sqrt(480.0));
    CHECK(mean < 480 + 3 * std::sqrt(480.0));
}

TEST_CASE("one keystroke emits the full per-layer footprint") {
    PipelineModel pipe = test_pipe();
    pipe.isr_jitter_frac = 0.0; // exact service cost
    CpuClock clock(2'400'000'000);
    Rng gen(2);
    KeyEvent ev{Timestamp::ns(100'000'000), KeyEvent::Kind::Real, 30};
    auto ems = process_event(ev, pipe, clock, gen, 0);

    int irq = 0, tick = 0, lines = 0, sets = 0;
    for (const auto& e : ems) {
        CHECK(e.t == ev.t);
        switch (e.channel) {
            case Emission::Channel::IrqKeyboard:
                ++irq;
                CHECK(e.busy.nanos() == 25000); // 60000 cycles at 2.4 GHz
                break;
            case Emission::Channel::TickKeyboard: ++tick; break;
            case Emission::Channel::CacheLine: ++lines; break;
            case Emission::Channel::CacheSet: ++sets; break;
            default: break;
        }
    }
    CHECK(irq == 1);
    CHECK(tick == 1);
    CHECK(lines == 3);
    CHECK(sets == 10);
}

TEST_CASE("single library address means a single cache line emission") {
    PipelineModel pipe = test_pipe();
    pipe.lib_addresses = {1101};
    CpuClock clock(2'400'000'000);
    Rng gen(2);
    auto ems = process_event({Timestamp::ns(0), KeyEvent::Kind::Real, 30}, pipe, clock, gen, 0);
    int lines = 0;
    for (const auto& e : ems)
        if (e.channel == Emission::Channel::CacheLine) ++lines;
    CHECK(lines == 1);
}

TEST_CASE("background with zero rates is empty") {
    PipelineModel pipe = test_pipe();
    pipe.other_irq_rate = 0;
    pipe.short_irq_rate = 0;
    pipe.cache_noise_rate = 0;
    Rng gen(3);
    CHECK(inject_background(pipe, Duration::seconds(60.0), CpuClock(2'400'000'000), gen).empty());
}

TEST_CASE("background interrupt count follows the Poisson oracle") {
    PipelineModel pipe = test_pipe();
    pipe.other_irq_rate = 4.0;
    pipe.short_irq_rate = 0;
    pipe.cache_noise_rate = 0;
    Rng gen(4);
    auto ems = inject_background(pipe, Duration::seconds(60.0), CpuClock(2'400'000'000), gen);
    int irqs = 0;
    for (const auto& e : ems)
        if (e.channel == Emission::Channel::IrqOther) ++irqs;
    CHECK(irqs >= 196); // 240 +- 3 sqrt(240)
    CHECK(irqs <= 288);
}

TEST_CASE("rescheduling interrupts sit above the class separation threshold") {
    PipelineModel pipe = test_pipe();
    pipe.short_irq_rate = 0;
    pipe.cache_noise_rate = 0;
    CpuClock clock(2'400'000'000);
    Rng gen(8);
    auto ems = inject_background(pipe, Duration::seconds(30.0), clock, gen);
    const int64_t separator = clock.cycles_to_duration(100000).nanos();
    const int64_t keyboard = clock.cycles_to_duration(60000).nanos();
    CHECK(keyboard < separator);
    for (const auto& e : ems) {
        if (e.channel != Emission::Channel::IrqOther) continue;
        CHECK(e.busy.nanos() > separator);
    }
}

TEST_CASE("emission streams are deterministic in the seed") {
    PipelineModel pipe = test_pipe();
    CpuClock clock(2'400'000'000);
    Rng g1(77), g2(77);
    auto a = inject_background(pipe, Duration::seconds(10.0), clock, g1);
    auto b = inject_background(pipe, Duration::seconds(10.0), clock, g2);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].t == b[i].t);
        CHECK(a[i].channel == b[i].channel);
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].busy == b[i].busy);
    }
}

TEST_CASE("cache channels stay disjoint and the model validates") {
    PipelineModel pipe = test_pipe();
    CHECK_NOTHROW(pipe.validate());

    CpuClock clock(2'400'000'000);
    Rng gen(6);
    auto ems = process_event({Timestamp::ns(0), KeyEvent::Kind::Real, 30}, pipe, clock, gen, 0);
    std::set<uint32_t> lines, sets;
    for (const auto& e : ems) {
        if (e.channel == Emission::Channel::CacheLine) lines.insert(e.id);
        if (e.channel == Emission::Channel::CacheSet) sets.insert(e.id);
    }
    for (uint32_t id : lines) CHECK(sets.count(id) == 0);

    PipelineModel bad = test_pipe();
    bad.buffer_sets.push_back(bad.kernel_sets.front());
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    PipelineModel inverted = test_pipe();
    inverted.isr_cycles = 200000;
    CHECK_THROWS_AS(inverted.validate(), std::invalid_argument);
}
