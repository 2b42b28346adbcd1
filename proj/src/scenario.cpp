#include "ktsim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ktsim {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

AttackerConfig make_attacker(const CpuClock& clock, const std::string& name,
                             const PipelineModel& pipe) {
    AttackerConfig cfg;
    cfg.probe_jitter_frac = 0.10;
    if (name == "rdtsc") {
        cfg.probe_interval = clock.cycles_to_duration(95);
        cfg.threshold = 1000.0; // cycles, per the recording loop
        cfg.band_lo_cycles = pipe.isr_cycles / 2;
        cfg.band_hi_cycles = (pipe.isr_cycles + pipe.other_irq_cycles) / 2;
    } else if (name == "procfs") {
        cfg.probe_interval = clock.cycles_to_duration(980);
    } else if (name == "flush-reload") {
        cfg.probe_interval = clock.cycles_to_duration(2400);
        cfg.miss_prob = 0.02;
        cfg.fp_rate = 0.01;
    } else { // multi-pp-kernel / multi-pp-buffer
        cfg.probe_interval = Duration::us(20);
        cfg.smooth_window = Duration::us(500);
        cfg.n_sets = 5;
        cfg.miss_prob = 0.17;
        cfg.threshold = 0.1; // smoothed summed activity
        cfg.fp_rate = 0.5;   // spurious single-set hits per second
    }
    return cfg;
}

Scenario make_x86_t460s() {
    Scenario sc;
    sc.name = "x86-t460s";
    sc.cpu_freq_hz = 2'400'000'000;
    sc.typing = {TypingModel::Mode::FreeText, Duration::ms(125), Duration::ms(30), 0};
    sc.pipe.isr_cycles = 60000;
    sc.pipe.timer_isr_cycles = 18000;
    sc.pipe.other_irq_cycles = 155000;
    sc.pipe.isr_jitter_frac = 0.05;
    sc.pipe.other_irq_rate = 4.0;
    sc.pipe.short_irq_rate = 1.0;
    sc.pipe.short_irq_lo_cycles = 35000;
    sc.pipe.short_irq_hi_cycles = 95000;
    sc.pipe.lib_addresses = {1101, 1102, 1103};
    sc.pipe.buffer_sets = {2201, 2202, 2203, 2204, 2205};
    sc.pipe.kernel_sets = {3301, 3302, 3303, 3304, 3305};
    sc.pipe.cache_noise_rate = 8.0;
    sc.pipe.cache_noise_prob = 0.55;
    sc.defense = DefenseConfig{};
    sc.flush_reload_target = sc.pipe.lib_addresses.front();
    CpuClock clock = sc.clock();
    for (const auto& a : kAttackNames) sc.attackers[a] = make_attacker(clock, a, sc.pipe);
    sc.targets["procfs"] = {1.00, 0.15};
    sc.targets["rdtsc"] = {0.94, 0.14};
    sc.targets["flush-reload"] = {0.99, 0.09};
    sc.targets["multi-pp-kernel"] = {0.81, 0.11};
    sc.targets["multi-pp-buffer"] = {0.81, 0.10};
    return sc;
}

Scenario make_nexus5() {
    Scenario sc = make_x86_t460s();
    sc.name = "nexus5";
    sc.cpu_freq_hz = 2'260'000'000;
    sc.pipe.isr_cycles = 70000;
    sc.pipe.timer_isr_cycles = 22000;
    sc.pipe.other_irq_cycles = 180000;
    sc.pipe.short_irq_lo_cycles = 40000;
    sc.pipe.short_irq_hi_cycles = 110000;
    CpuClock clock = sc.clock();
    for (const auto& a : kAttackNames) sc.attackers[a] = make_attacker(clock, a, sc.pipe);
    sc.targets["procfs"] = {1.00, 0.15};
    sc.targets["rdtsc"] = {0.94, 0.14};
    sc.targets["flush-reload"] = {0.99, 0.02};
    sc.targets["multi-pp-kernel"] = {0.80, 0.11};
    sc.targets["multi-pp-buffer"] = {0.80, 0.11};
    return sc;
}

Scenario make_oneplus3t() {
    Scenario sc = make_x86_t460s();
    sc.name = "oneplus3t";
    sc.cpu_freq_hz = 2'350'000'000;
    sc.pipe.isr_cycles = 55000;
    sc.pipe.timer_isr_cycles = 16000;
    sc.pipe.other_irq_cycles = 140000;
    sc.pipe.short_irq_rate = 0.1; // quieter interrupt environment
    sc.pipe.cache_noise_rate = 3.0;
    CpuClock clock = sc.clock();
    for (const auto& a : kAttackNames) sc.attackers[a] = make_attacker(clock, a, sc.pipe);
    sc.attackers["flush-reload"].miss_prob = 0.06;
    sc.attackers["flush-reload"].fp_rate = 1.0;
    sc.attackers["multi-pp-kernel"].miss_prob = 0.08;
    sc.attackers["multi-pp-buffer"].miss_prob = 0.08;
    sc.targets["procfs"] = {1.00, 0.15};
    sc.targets["rdtsc"] = {0.99, 0.15};
    sc.targets["flush-reload"] = {0.93, 0.10};
    sc.targets["multi-pp-kernel"] = {0.89, 0.07};
    sc.targets["multi-pp-buffer"] = {0.89, 0.07};
    return sc;
}

} // namespace

void Scenario::validate() const {
    pipe.validate();
    defense.validate();
    require(!attackers.empty(), "Scenario: no attackers configured");
    for (const auto& [name, cfg] : attackers) {
        require(std::find(kAttackNames.begin(), kAttackNames.end(), name) != kAttackNames.end(),
                "Scenario: unknown attack name '" + name + "'");
        cfg.validate();
    }
    require(std::find(pipe.lib_addresses.begin(), pipe.lib_addresses.end(), flush_reload_target) !=
                pipe.lib_addresses.end(),
            "Scenario: flush-reload target must be a monitored library address");
}

std::vector<std::string> builtin_scenario_names() { return {"x86-t460s", "nexus5", "oneplus3t"}; }

Scenario builtin_scenario(const std::string& name) {
    if (name == "x86-t460s") return make_x86_t460s();
    if (name == "nexus5") return make_nexus5();
    if (name == "oneplus3t") return make_oneplus3t();
    throw std::invalid_argument("unknown scenario: " + name);
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw std::invalid_argument(std::string("unknown key '") + key + "' in " + where);
    }
}

Duration ms_field(const json& j, const char* key, Duration fallback) {
    if (!j.contains(key)) return fallback;
    return Duration::ns(static_cast<int64_t>(j.at(key).get<double>() * 1e6));
}

void apply_typing(const json& j, TypingModel& m) {
    check_keys(j, {"mode", "mean_interval_ms", "sigma_ms", "count"}, "typing");
    if (j.contains("mode")) {
        std::string mode = j.at("mode").get<std::string>();
        if (mode == "free-text")
            m.mode = TypingModel::Mode::FreeText;
        else if (mode == "fixed-count")
            m.mode = TypingModel::Mode::FixedCount;
        else
            throw std::invalid_argument("typing.mode must be free-text or fixed-count");
    }
    m.mean_interval = ms_field(j, "mean_interval_ms", m.mean_interval);
    m.sigma = ms_field(j, "sigma_ms", m.sigma);
    if (j.contains("count")) m.count = j.at("count").get<int>();
}

void apply_pipeline(const json& j, PipelineModel& p) {
    check_keys(j,
               {"isr_cycles", "timer_isr_cycles", "other_irq_cycles", "isr_jitter_frac",
                "other_irq_rate", "short_irq_rate", "short_irq_lo_cycles", "short_irq_hi_cycles",
                "lib_addresses", "buffer_sets", "kernel_sets", "cache_noise_rate",
                "cache_noise_prob"},
               "pipeline");
    if (j.contains("isr_cycles")) p.isr_cycles = j.at("isr_cycles").get<int64_t>();
    if (j.contains("timer_isr_cycles")) p.timer_isr_cycles = j.at("timer_isr_cycles").get<int64_t>();
    if (j.contains("other_irq_cycles")) p.other_irq_cycles = j.at("other_irq_cycles").get<int64_t>();
    if (j.contains("isr_jitter_frac")) p.isr_jitter_frac = j.at("isr_jitter_frac").get<double>();
    if (j.contains("other_irq_rate")) p.other_irq_rate = j.at("other_irq_rate").get<double>();
    if (j.contains("short_irq_rate")) p.short_irq_rate = j.at("short_irq_rate").get<double>();
    if (j.contains("short_irq_lo_cycles"))
        p.short_irq_lo_cycles = j.at("short_irq_lo_cycles").get<int64_t>();
    if (j.contains("short_irq_hi_cycles"))
        p.short_irq_hi_cycles = j.at("short_irq_hi_cycles").get<int64_t>();
    if (j.contains("lib_addresses")) p.lib_addresses = j.at("lib_addresses").get<std::vector<uint32_t>>();
    if (j.contains("buffer_sets")) p.buffer_sets = j.at("buffer_sets").get<std::vector<uint32_t>>();
    if (j.contains("kernel_sets")) p.kernel_sets = j.at("kernel_sets").get<std::vector<uint32_t>>();
    if (j.contains("cache_noise_rate")) p.cache_noise_rate = j.at("cache_noise_rate").get<double>();
    if (j.contains("cache_noise_prob")) p.cache_noise_prob = j.at("cache_noise_prob").get<double>();
}

void apply_defense(const json& j, DefenseConfig& d) {
    check_keys(j, {"enabled", "inj_lo_ms", "inj_hi_ms", "handler_delay_max_ms", "layers"},
               "defense");
    if (j.contains("enabled")) d.enabled = j.at("enabled").get<bool>();
    d.inj_lo = ms_field(j, "inj_lo_ms", d.inj_lo);
    d.inj_hi = ms_field(j, "inj_hi_ms", d.inj_hi);
    d.handler_delay_max = ms_field(j, "handler_delay_max_ms", d.handler_delay_max);
    if (j.contains("layers")) {
        d.layers.clear();
        for (const auto& l : j.at("layers")) {
            std::string s = l.get<std::string>();
            if (s == "L1")
                d.layers.insert(Layer::L1);
            else if (s == "L2")
                d.layers.insert(Layer::L2);
            else if (s == "L3")
                d.layers.insert(Layer::L3);
            else
                throw std::invalid_argument("defense.layers entries must be L1, L2 or L3");
        }
    }
}

void apply_attacker(const json& j, AttackerConfig& a) {
    check_keys(j,
               {"probe_interval_ns", "threshold", "n_sets", "smooth_window_ns", "miss_prob",
                "fp_rate", "probe_jitter_frac", "band_lo_cycles", "band_hi_cycles"},
               "attacker");
    if (j.contains("probe_interval_ns"))
        a.probe_interval = Duration::ns(j.at("probe_interval_ns").get<int64_t>());
    if (j.contains("threshold")) {
        if (j.at("threshold").is_string()) {
            require(j.at("threshold").get<std::string>() == "AUTO",
                    "attacker.threshold must be a number or \"AUTO\"");
            a.threshold_auto = true;
        } else {
            a.threshold = j.at("threshold").get<double>();
            a.threshold_auto = false;
        }
    }
    if (j.contains("n_sets")) a.n_sets = j.at("n_sets").get<int>();
    if (j.contains("smooth_window_ns"))
        a.smooth_window = Duration::ns(j.at("smooth_window_ns").get<int64_t>());
    if (j.contains("miss_prob")) a.miss_prob = j.at("miss_prob").get<double>();
    if (j.contains("fp_rate")) a.fp_rate = j.at("fp_rate").get<double>();
    if (j.contains("probe_jitter_frac")) a.probe_jitter_frac = j.at("probe_jitter_frac").get<double>();
    if (j.contains("band_lo_cycles")) a.band_lo_cycles = j.at("band_lo_cycles").get<int64_t>();
    if (j.contains("band_hi_cycles")) a.band_hi_cycles = j.at("band_hi_cycles").get<int64_t>();
}

} // namespace

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j = json::parse(in);
    check_keys(j,
               {"scenario", "name", "cpu_freq_hz", "typing", "pipeline", "defense", "attackers",
                "flush_reload_target"},
               "config root");

    Scenario sc = builtin_scenario(j.value("scenario", std::string("x86-t460s")));
    if (j.contains("name")) sc.name = j.at("name").get<std::string>();
    if (j.contains("cpu_freq_hz")) sc.cpu_freq_hz = j.at("cpu_freq_hz").get<int64_t>();
    if (j.contains("typing")) apply_typing(j.at("typing"), sc.typing);
    if (j.contains("pipeline")) apply_pipeline(j.at("pipeline"), sc.pipe);
    if (j.contains("defense")) apply_defense(j.at("defense"), sc.defense);
    if (j.contains("attackers")) {
        for (const auto& [name, obj] : j.at("attackers").items()) {
            auto it = sc.attackers.find(name);
            require(it != sc.attackers.end(), "unknown attacker '" + name + "' in config");
            apply_attacker(obj, it->second);
        }
    }
    if (j.contains("flush_reload_target"))
        sc.flush_reload_target = j.at("flush_reload_target").get<uint32_t>();
    sc.validate();
    return sc;
}

// ---------------------------------------------------------------------------
// Run pipeline
// ---------------------------------------------------------------------------

namespace {

EmissionList build_emissions(const Scenario& sc, const GroundTruth& truth, bool defense_on,
                             Duration span, Rng& root) {
    CpuClock clock = sc.clock();
    Rng defense_gen = root.derive("defense");
    Rng pipeline_gen = root.derive("pipeline");
    Rng background_gen = root.derive("background");

    DefenseConfig cfg = sc.defense;
    cfg.enabled = defense_on;
    MergedStream merged = injection_loop(truth, cfg, span, defense_gen);

    EmissionList out;
    if (defense_on) {
        out = defended_emissions(merged, sc.pipe, cfg, clock, pipeline_gen);
    } else {
        for (size_t i = 0; i < merged.events.size(); ++i) {
            auto ems = process_event(merged.events[i], sc.pipe, clock, pipeline_gen,
                                     static_cast<int32_t>(i));
            out.insert(out.end(), ems.begin(), ems.end());
        }
    }
    EmissionList bg = inject_background(sc.pipe, span, clock, background_gen);
    out.insert(out.end(), bg.begin(), bg.end());
    std::stable_sort(out.begin(), out.end(),
                     [](const Emission& a, const Emission& b) { return a.t < b.t; });
    return out;
}

DetectionResult dispatch_attack(const Scenario& sc, const std::string& attack,
                                const EmissionList& emissions, Duration span, Rng& root,
                                ProbeTrace* trace) {
    auto it = sc.attackers.find(attack);
    require(it != sc.attackers.end(), "scenario has no attacker named '" + attack + "'");
    const AttackerConfig& cfg = it->second;
    CpuClock clock = sc.clock();
    Rng gen = root.derive("attacker-" + attack);

    if (attack == "rdtsc") return rdtsc_attack(emissions, cfg, clock, gen, trace);
    if (attack == "procfs") return procfs_attack(emissions, cfg, gen, trace);
    if (attack == "flush-reload")
        return flush_reload_attack(emissions, sc.flush_reload_target, sc.pipe.lib_addresses, cfg,
                                   span, gen, trace);
    if (attack == "multi-pp-kernel")
        return multi_prime_probe_attack(emissions, sc.pipe.kernel_sets, cfg, span, gen,
                                        Duration::ms(10), trace);
    if (attack == "multi-pp-buffer")
        return multi_prime_probe_attack(emissions, sc.pipe.buffer_sets, cfg, span, gen,
                                        Duration::ms(10), trace);
    throw std::invalid_argument("unknown attack: " + attack);
}

} // namespace

RunReport run(const Scenario& sc, const std::string& attack, bool defense_on, uint64_t seed,
              Duration span) {
    sc.validate();
    auto t0 = std::chrono::steady_clock::now();

    Rng root(seed);
    Rng typing_gen = root.derive("typing");
    GroundTruth truth = generate_typing(sc.typing, span, typing_gen);
    EmissionList emissions = build_emissions(sc, truth, defense_on, span, root);
    DetectionResult det = dispatch_attack(sc, attack, emissions, span, root, nullptr);

    FrameGrid grid = FrameGrid::from_truth(truth, span);
    RunReport rep;
    rep.scenario = sc.name;
    rep.attack = attack;
    rep.defense_on = defense_on;
    rep.seed = seed;
    rep.metrics = evaluate(det, truth, grid);
    rep.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();
    return rep;
}

ProbeTrace dump_trace(const Scenario& sc, const std::string& attack, bool defense_on,
                      uint64_t seed, Duration span) {
    sc.validate();
    Rng root(seed);
    Rng typing_gen = root.derive("typing");
    GroundTruth truth = generate_typing(sc.typing, span, typing_gen);
    EmissionList emissions = build_emissions(sc, truth, defense_on, span, root);
    ProbeTrace trace;
    dispatch_attack(sc, attack, emissions, span, root, &trace);
    return trace;
}

std::vector<RunReport> sweep(const Scenario& sc, const std::vector<std::string>& attacks,
                             int n_seeds, Duration span, int jobs) {
    require(!attacks.empty(), "sweep: no attacks given");
    require(n_seeds >= 1, "sweep: need at least one seed");
    sc.validate();

    struct Cell {
        std::string attack;
        bool on;
        uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& a : attacks)
        for (bool on : {false, true})
            for (int s = 0; s < n_seeds; ++s)
                cells.push_back({a, on, static_cast<uint64_t>(s + 1)});

    std::vector<RunReport> rows(cells.size());
#ifdef _OPENMP
    int nthreads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
#endif
    for (int64_t i = 0; i < static_cast<int64_t>(cells.size()); ++i) {
        const Cell& c = cells[static_cast<size_t>(i)];
        rows[static_cast<size_t>(i)] = run(sc, c.attack, c.on, c.seed, span);
    }
#ifndef _OPENMP
    (void)jobs;
#endif
    return rows;
}

std::vector<SweepSummary> summarize(const std::vector<RunReport>& rows) {
    std::vector<SweepSummary> out;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SweepSummary& s) {
            return s.attack == r.attack && s.defense_on == r.defense_on;
        });
        if (it == out.end()) {
            out.push_back({r.attack, r.defense_on, 0.0, 0.0});
            it = out.end() - 1;
        }
        it->mean_fscore += r.metrics.fscore;
        it->mean_advantage_pct += r.metrics.advantage_pct;
    }
    for (auto& s : out) {
        int64_t n = std::count_if(rows.begin(), rows.end(), [&](const RunReport& r) {
            return r.attack == s.attack && r.defense_on == s.defense_on;
        });
        if (n > 0) {
            s.mean_fscore /= static_cast<double>(n);
            s.mean_advantage_pct /= static_cast<double>(n);
        }
    }
    return out;
}

} // namespace ktsim
