#include <doctest.h>

#include <algorithm>
#include <map>
#include <tuple>

#include "ktsim/defense.hpp"
#include "stat_utils.hpp"

using namespace ktsim;

namespace {

PipelineModel test_pipe() {
    PipelineModel p;
    p.lib_addresses = {1101, 1102, 1103};
    p.buffer_sets = {2201, 2202, 2203, 2204, 2205};
    p.kernel_sets = {3301, 3302, 3303, 3304, 3305};
    return p;
}

GroundTruth typing(uint64_t seed, double span_s, Duration mean = Duration::ms(125)) {
    Rng gen = Rng(seed).derive("typing");
    TypingModel m{TypingModel::Mode::FreeText, mean, Duration::ms(30), 0};
    return generate_typing(m, Duration::seconds(span_s), gen);
}

// cost class of an emission, wide enough to absorb the per-event jitter
int cost_class(const Emission& e, const PipelineModel& pipe, const CpuClock& clock) {
    if (e.busy.nanos() == 0) return 0;
    int64_t kbd = clock.cycles_to_duration(pipe.isr_cycles).nanos();
    int64_t tmr = clock.cycles_to_duration(pipe.timer_isr_cycles).nanos();
    return std::abs(e.busy.nanos() - kbd) < std::abs(e.busy.nanos() - tmr) ? 1 : 2;
}

using Footprint = std::multiset<std::tuple<int, uint32_t, int>>; // (channel, id, cost class)

Footprint footprint_of(int32_t source, const EmissionList& ems, const PipelineModel& pipe,
                       const CpuClock& clock) {
    Footprint fp;
    for (const auto& e : ems)
        if (e.source == source)
            fp.insert({static_cast<int>(e.channel), e.id, cost_class(e, pipe, clock)});
    return fp;
}

} // namespace

TEST_CASE("disabled defense passes ground truth through unchanged") {
    Rng gen(1);
    auto truth = typing(3, 10.0);
    DefenseConfig cfg;
    cfg.enabled = false;
    auto merged = injection_loop(truth, cfg, Duration::seconds(10.0), gen);
    REQUIRE(merged.events.size() == truth.size());
    for (size_t i = 0; i < truth.size(); ++i) {
        CHECK(merged.events[i].t == truth[i]);
        CHECK(merged.events[i].kind == KeyEvent::Kind::Real);
    }
}

TEST_CASE("injection with no typing emits the expected fake count") {
    Rng gen(2);
    auto merged = injection_loop({}, DefenseConfig{}, Duration::seconds(60.0), gen);
    int64_t fakes = 0;
    for (const auto& e : merged.events)
        if (e.kind == KeyEvent::Kind::Fake) ++fakes;
    CHECK(std::abs(fakes - 6000) <= 180);
    for (size_t i = 1; i < merged.events.size(); ++i) {
        Duration gap = merged.events[i].t - merged.events[i - 1].t;
        CHECK(gap >= Duration::ms(0));
        CHECK(gap <= Duration::ms(20));
    }
}

TEST_CASE("total event rate stays flat while the victim types") {
    Rng gen(3);
    auto truth = typing(3, 60.0);
    REQUIRE(truth.size() > 400); // around 8 keystrokes per second
    auto merged = injection_loop(truth, DefenseConfig{}, Duration::seconds(60.0), gen);
    double rate = static_cast<double>(merged.events.size()) / 60.0;
    CHECK(rate >= 97.0);
    CHECK(rate <= 103.0);
}

TEST_CASE("injection preserves every real keystroke at its original time") {
    Rng gen(4);
    auto truth = typing(11, 30.0);
    auto merged = injection_loop(truth, DefenseConfig{}, Duration::seconds(30.0), gen);
    std::vector<Timestamp> reals;
    for (const auto& e : merged.events)
        if (e.kind == KeyEvent::Kind::Real) reals.push_back(e.t);
    REQUIRE(reals.size() == truth.size());
    for (size_t i = 0; i < truth.size(); ++i) CHECK(reals[i] == truth[i]);
}

TEST_CASE("fake events carry the reserved key code only") {
    Rng gen(5);
    auto merged = injection_loop(typing(5, 10.0), DefenseConfig{}, Duration::seconds(10.0), gen);
    for (const auto& e : merged.events) {
        if (e.kind == KeyEvent::Kind::Fake)
            CHECK(e.key_code == kFakeKeyCode);
        else
            CHECK(e.key_code != kFakeKeyCode);
    }
}

TEST_CASE("layer 1 gives fake and real events the same channel multiset") {
    PipelineModel pipe = test_pipe();
    CpuClock clock(2'400'000'000);
    Rng gen(6);
    MergedStream stream;
    stream.events.push_back({Timestamp::ns(5'000'000), KeyEvent::Kind::Real, 30});
    stream.events.push_back({Timestamp::ns(15'000'000), KeyEvent::Kind::Fake, kFakeKeyCode});
    auto ems = layer1_emissions(stream, pipe, DefenseConfig{}, clock, gen);

    auto fp_real = footprint_of(0, ems, pipe, clock);
    auto fp_fake = footprint_of(1, ems, pipe, clock);
    CHECK(fp_real == fp_fake);
}

TEST_CASE("layer 1 with zero handler delay emits at the event time") {
    PipelineModel pipe = test_pipe();
    CpuClock clock(2'400'000'000);
    Rng gen(7);
    DefenseConfig cfg;
    cfg.handler_delay_max = Duration::ns(0);
    MergedStream stream;
    stream.events.push_back({Timestamp::ns(1'000'000), KeyEvent::Kind::Fake, kFakeKeyCode});
    for (const auto& e : layer1_emissions(stream, pipe, cfg, clock, gen))
        CHECK(e.t == Timestamp::ns(1'000'000));
}

TEST_CASE("layer 1 busy distributions match between real and fake events") {
    // two-sample KS oracle on identical generators
    PipelineModel pipe = test_pipe();
    CpuClock clock(2'400'000'000);
    Rng gen(8);
    MergedStream stream;
    for (int i = 0; i < 2000; ++i)
        stream.events.push_back({Timestamp::ns(i * 1'000'000),
                                 (i % 2 == 0) ? KeyEvent::Kind::Real : KeyEvent::Kind::Fake,
                                 (i % 2 == 0) ? uint16_t(30) : kFakeKeyCode});
    auto ems = layer1_emissions(stream, pipe, DefenseConfig{}, clock, gen);

    std::vector<double> real_busy, fake_busy;
    for (const auto& e : ems) {
        if (e.channel != Emission::Channel::IrqKeyboard) continue;
        bool real = stream.events[static_cast<size_t>(e.source)].kind == KeyEvent::Kind::Real;
        (real ? real_busy : fake_busy).push_back(static_cast<double>(e.busy.nanos()));
    }
    REQUIRE(real_busy.size() == 1000);
    REQUIRE(fake_busy.size() == 1000);
    CHECK(teststat::ks_statistic(real_busy, fake_busy) <= 0.06);
}

TEST_CASE("layer 2 duplicates the library path for every event") {
    PipelineModel pipe = test_pipe();
    MergedStream stream;
    stream.events.push_back({Timestamp::ns(1000), KeyEvent::Kind::Real, 30});
    auto ems = layer2_duplicate(stream, pipe);
    CHECK(ems.size() == 6); // 3 addresses, twice

    stream.events.push_back({Timestamp::ns(2000), KeyEvent::Kind::Fake, kFakeKeyCode});
    ems = layer2_duplicate(stream, pipe);
    std::multiset<uint32_t> real_ids, fake_ids;
    for (const auto& e : ems)
        (e.source == 0 ? real_ids : fake_ids).insert(e.id);
    CHECK(real_ids == fake_ids);
}

TEST_CASE("disabled layer 2 leaves fake events without library footprint") {
    PipelineModel pipe = test_pipe();
    CpuClock clock(2'400'000'000);
    Rng gen(9);
    DefenseConfig cfg;
    cfg.layers = {Layer::L1, Layer::L3};
    MergedStream stream;
    stream.events.push_back({Timestamp::ns(1000), KeyEvent::Kind::Fake, kFakeKeyCode});
    stream.events.push_back({Timestamp::ns(2000), KeyEvent::Kind::Real, 30});
    auto ems = defended_emissions(stream, pipe, cfg, clock, gen);
    int fake_lines = 0, real_lines = 0;
    for (const auto& e : ems) {
        if (e.channel != Emission::Channel::CacheLine) continue;
        if (e.source == 0)
            ++fake_lines;
        else
            ++real_lines;
    }
    CHECK(fake_lines == 0);
    CHECK(real_lines == 3); // natural single-pass path
}

TEST_CASE("layer 3 gates the buffer footprint of fake events") {
    PipelineModel pipe = test_pipe();
    CpuClock clock(2'400'000'000);
    MergedStream stream;
    stream.events.push_back({Timestamp::ns(1000), KeyEvent::Kind::Fake, kFakeKeyCode});
    stream.events.push_back({Timestamp::ns(2000), KeyEvent::Kind::Real, 30});

    auto count_buffer = [&](const EmissionList& ems, int32_t src) {
        int n = 0;
        for (const auto& e : ems)
            if (e.channel == Emission::Channel::CacheSet && e.source == src &&
                std::find(pipe.buffer_sets.begin(), pipe.buffer_sets.end(), e.id) !=
                    pipe.buffer_sets.end())
                ++n;
        return n;
    };

    Rng g1(10);
    DefenseConfig all_on;
    auto ems = defended_emissions(stream, pipe, all_on, clock, g1);
    CHECK(count_buffer(ems, 0) == 5);
    CHECK(count_buffer(ems, 1) == 5);

    Rng g2(10);
    DefenseConfig no_l3;
    no_l3.layers = {Layer::L1, Layer::L2};
    ems = defended_emissions(stream, pipe, no_l3, clock, g2);
    CHECK(count_buffer(ems, 0) == 0); // fake: buffer untouched
    CHECK(count_buffer(ems, 1) == 5); // real input always updates the buffer
}

TEST_CASE("full-stack footprint of one fake equals one real, exactly") {
    PipelineModel pipe = test_pipe();
    CpuClock clock(2'400'000'000);
    Rng gen(11);
    MergedStream stream;
    stream.events.push_back({Timestamp::ns(1'000'000), KeyEvent::Kind::Real, 30});
    stream.events.push_back({Timestamp::ns(9'000'000), KeyEvent::Kind::Fake, kFakeKeyCode});
    auto ems = defended_emissions(stream, pipe, DefenseConfig{}, clock, gen);
    CHECK(footprint_of(0, ems, pipe, clock) == footprint_of(1, ems, pipe, clock));
}

TEST_CASE("merged inter-arrival distribution is typing-invariant") {
    // KS between defended streams with and without typing
    auto gaps = [](const MergedStream& m) {
        std::vector<double> g;
        for (size_t i = 1; i < m.events.size(); ++i)
            g.push_back(static_cast<double>((m.events[i].t - m.events[i - 1].t).nanos()));
        return g;
    };
    Rng g1 = Rng(12).derive("defense");
    Rng g2 = Rng(13).derive("defense");
    auto with = injection_loop(typing(12, 60.0), DefenseConfig{}, Duration::seconds(60.0), g1);
    auto without = injection_loop({}, DefenseConfig{}, Duration::seconds(60.0), g2);
    CHECK(teststat::ks_statistic(gaps(with), gaps(without)) <= 0.05);
}

TEST_CASE("no single event feature separates real from fake") {
    // threshold-classifier AUC on per-event features, a handful of seeds
    // (the acceptance suite runs the full 20-seed version)
    for (uint64_t seed : {21, 22, 23}) {
        Rng root(seed);
        Rng dgen = root.derive("defense");
        Rng pgen = root.derive("pipeline");
        PipelineModel pipe = test_pipe();
        CpuClock clock(2'400'000'000);
        auto truth = typing(seed, 60.0);
        auto merged = injection_loop(truth, DefenseConfig{}, Duration::seconds(60.0), dgen);
        auto ems = defended_emissions(merged, pipe, DefenseConfig{}, clock, pgen);

        std::vector<double> real_gap, fake_gap, real_busy, fake_busy, real_cnt, fake_cnt;
        std::map<int32_t, int> counts;
        std::map<int32_t, double> busy;
        for (const auto& e : ems) {
            if (e.source < 0) continue;
            counts[e.source]++;
            if (e.channel == Emission::Channel::IrqKeyboard)
                busy[e.source] = static_cast<double>(e.busy.nanos());
        }
        for (size_t i = 1; i < merged.events.size(); ++i) {
            bool real = merged.events[i].kind == KeyEvent::Kind::Real;
            double gap = static_cast<double>((merged.events[i].t - merged.events[i - 1].t).nanos());
            (real ? real_gap : fake_gap).push_back(gap);
            auto idx = static_cast<int32_t>(i);
            (real ? real_busy : fake_busy).push_back(busy[idx]);
            (real ? real_cnt : fake_cnt).push_back(static_cast<double>(counts[idx]));
        }
        CHECK(teststat::threshold_auc(real_gap, fake_gap) <= 0.55);
        CHECK(teststat::threshold_auc(real_busy, fake_busy) <= 0.55);
        CHECK(teststat::threshold_auc(real_cnt, fake_cnt) <= 0.55);
    }
}

TEST_CASE("degenerate injection interval fires strictly periodically") {
    Rng gen(30);
    DefenseConfig cfg;
    cfg.inj_lo = Duration::ms(10);
    cfg.inj_hi = Duration::ms(10);
    auto merged = injection_loop({}, cfg, Duration::seconds(1.0), gen);
    REQUIRE(merged.events.size() == 100);
    for (size_t i = 1; i < merged.events.size(); ++i)
        CHECK((merged.events[i].t - merged.events[i - 1].t).nanos() == 10'000'000);
}

TEST_CASE("defense config validation") {
    DefenseConfig bad;
    bad.inj_lo = Duration::ms(30);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    DefenseConfig zero;
    zero.inj_lo = Duration::ms(0);
    zero.inj_hi = Duration::ms(0);
    CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
}
