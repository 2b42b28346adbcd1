#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ktsim/attack.hpp"
#include "ktsim/defense.hpp"
#include "ktsim/metrics.hpp"
#include "ktsim/victim.hpp"

namespace ktsim {

inline const std::vector<std::string> kAttackNames = {
    "procfs", "rdtsc", "flush-reload", "multi-pp-kernel", "multi-pp-buffer"};

/// Published operating points (metadata only, never asserted at run time).
struct AttackTargets {
    double fscore_off = 0.0;
    double fscore_on = 0.0;
};

/// A named bundle of victim, defense, attacker and noise parameters.
struct Scenario {
    std::string name;
    int64_t cpu_freq_hz = 2'400'000'000;
    TypingModel typing;
    PipelineModel pipe;
    DefenseConfig defense;
    std::map<std::string, AttackerConfig> attackers;
    std::map<std::string, AttackTargets> targets;
    uint32_t flush_reload_target = 0; // defaults to the first library address

    [[nodiscard]] CpuClock clock() const { return CpuClock(cpu_freq_hz); }
    void validate() const;
};

/// Built-in presets: x86-t460s (default), nexus5, oneplus3t.
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

/// Applies a JSON config file over a scenario. Unknown keys are an error.
Scenario load_scenario_file(const std::string& path);

struct RunReport {
    std::string scenario;
    std::string attack;
    bool defense_on = false;
    uint64_t seed = 0;
    Metrics metrics;
    double runtime_ms = 0.0;
};

/// Composes victim -> defense -> emissions -> attacker -> metrics.
/// Deterministic per seed; independent of how many runs execute in
/// parallel around it.
RunReport run(const Scenario& sc, const std::string& attack, bool defense_on, uint64_t seed,
              Duration span);

/// Raw attacker trace of one run (plot data).
ProbeTrace dump_trace(const Scenario& sc, const std::string& attack, bool defense_on,
                      uint64_t seed, Duration span);

struct SweepSummary {
    std::string attack;
    bool defense_on = false;
    double mean_fscore = 0.0;
    double mean_advantage_pct = 0.0;
};

/// Full attack x defense x seed grid. Rows come back in deterministic grid
/// order regardless of the parallel schedule.
std::vector<RunReport> sweep(const Scenario& sc, const std::vector<std::string>& attacks,
                             int n_seeds, Duration span, int jobs = 0);

std::vector<SweepSummary> summarize(const std::vector<RunReport>& rows);

} // namespace ktsim
