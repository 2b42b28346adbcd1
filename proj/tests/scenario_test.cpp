#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ktsim/scenario.hpp"

using namespace ktsim;

TEST_CASE("built-in presets validate and know all five attacks") {
    for (const auto& name : builtin_scenario_names()) {
        Scenario sc = builtin_scenario(name);
        CHECK_NOTHROW(sc.validate());
        for (const auto& a : kAttackNames) CHECK(sc.attackers.count(a) == 1);
    }
    CHECK_THROWS_AS(builtin_scenario("t1000"), std::invalid_argument);
}

TEST_CASE("runs are deterministic per seed") {
    Scenario sc = builtin_scenario("x86-t460s");
    RunReport a = run(sc, "rdtsc", true, 42, Duration::seconds(5.0));
    RunReport b = run(sc, "rdtsc", true, 42, Duration::seconds(5.0));
    CHECK(a.metrics.tp == b.metrics.tp);
    CHECK(a.metrics.fp == b.metrics.fp);
    CHECK(a.metrics.fn == b.metrics.fn);
    CHECK(a.metrics.fscore == b.metrics.fscore);

    RunReport c = run(sc, "rdtsc", true, 43, Duration::seconds(5.0));
    CHECK((c.metrics.tp != a.metrics.tp || c.metrics.fp != a.metrics.fp));
}

TEST_CASE("unknown attack names are rejected") {
    Scenario sc = builtin_scenario("x86-t460s");
    CHECK_THROWS_AS(run(sc, "drama", false, 1, Duration::seconds(1.0)), std::invalid_argument);
}

TEST_CASE("sweep produces the full grid in deterministic order") {
    Scenario sc = builtin_scenario("x86-t460s");
    auto rows = sweep(sc, {"procfs", "rdtsc"}, 2, Duration::seconds(2.0), 2);
    REQUIRE(rows.size() == 8); // 2 attacks x 2 states x 2 seeds
    CHECK(rows[0].attack == "procfs");
    CHECK(rows[0].defense_on == false);
    CHECK(rows[0].seed == 1);
    CHECK(rows[1].seed == 2);
    CHECK(rows[2].defense_on == true);
    CHECK(rows[4].attack == "rdtsc");

    // the same sweep single-threaded yields identical metrics
    auto rows1 = sweep(sc, {"procfs", "rdtsc"}, 2, Duration::seconds(2.0), 1);
    REQUIRE(rows1.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].metrics.tp == rows1[i].metrics.tp);
        CHECK(rows[i].metrics.fp == rows1[i].metrics.fp);
        CHECK(rows[i].metrics.fscore == rows1[i].metrics.fscore);
    }

    auto summary = summarize(rows);
    CHECK(summary.size() == 4);
}

TEST_CASE("config files override presets and reject unknown keys") {
    const char* path = "/tmp/ktsim_test_config.json";
    {
        std::ofstream f(path);
        f << R"({"scenario": "x86-t460s", "name": "tweaked",
                 "pipeline": {"other_irq_rate": 2.5},
                 "defense": {"inj_hi_ms": 16},
                 "attackers": {"rdtsc": {"threshold": 1200}}})";
    }
    Scenario sc = load_scenario_file(path);
    CHECK(sc.name == "tweaked");
    CHECK(sc.pipe.other_irq_rate == 2.5);
    CHECK(sc.defense.inj_hi == Duration::ms(16));
    CHECK(sc.attackers.at("rdtsc").threshold == 1200.0);

    {
        std::ofstream f(path);
        f << R"({"scenario": "x86-t460s", "pipelin": {"other_irq_rate": 2.5}})";
    }
    CHECK_THROWS_AS(load_scenario_file(path), std::invalid_argument);

    {
        std::ofstream f(path);
        f << R"({"scenario": "x86-t460s", "pipeline": {"other_irq_rte": 2.5}})";
    }
    CHECK_THROWS_AS(load_scenario_file(path), std::invalid_argument);
    std::remove(path);
}

TEST_CASE("AUTO thresholds without calibration fail the run") {
    Scenario sc = builtin_scenario("x86-t460s");
    sc.attackers["rdtsc"].threshold_auto = true;
    CHECK_THROWS_AS(run(sc, "rdtsc", false, 1, Duration::seconds(1.0)), std::invalid_argument);
}

TEST_CASE("recall is preserved by the defense when probes never miss") {
    Scenario sc = builtin_scenario("x86-t460s");
    sc.attackers["flush-reload"].miss_prob = 0.0;
    sc.attackers["flush-reload"].fp_rate = 0.0;
    sc.attackers["multi-pp-kernel"].miss_prob = 0.0;
    sc.attackers["multi-pp-kernel"].fp_rate = 0.0;
    for (const auto& attack : {"procfs", "flush-reload", "multi-pp-kernel"}) {
        RunReport off = run(sc, attack, false, 3, Duration::seconds(20.0));
        RunReport on = run(sc, attack, true, 3, Duration::seconds(20.0));
        CHECK(off.metrics.recall == doctest::Approx(1.0));
        CHECK(on.metrics.recall == doctest::Approx(off.metrics.recall));
    }
}

TEST_CASE("probe traces are time-ordered and non-empty") {
    Scenario sc = builtin_scenario("x86-t460s");
    for (const auto& attack : kAttackNames) {
        ProbeTrace tr = dump_trace(sc, attack, true, 5, Duration::seconds(2.0));
        REQUIRE(!tr.samples.empty());
        for (size_t i = 1; i < tr.samples.size(); ++i)
            CHECK(tr.samples[i].first > tr.samples[i - 1].first);
    }
}
