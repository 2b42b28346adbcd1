#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ktsim/csv.hpp"
#include "ktsim/multitrace.hpp"
#include "ktsim/scenario.hpp"

namespace {

using namespace ktsim;

Scenario resolve_scenario(const std::string& name, const std::string& config_path) {
    if (!config_path.empty()) {
        Scenario sc = load_scenario_file(config_path);
        return sc;
    }
    return builtin_scenario(name);
}

bool parse_defense(const std::string& s) {
    if (s == "on") return true;
    if (s == "off") return false;
    throw CLI::ValidationError("--defense must be 'on' or 'off'");
}

void write_report_rows(CsvWriter& csv, const std::vector<RunReport>& rows) {
    csv.header("scenario,attack,defense,seed,tp,fp,fn,precision,recall,fscore,advantage_pct");
    for (const auto& r : rows) {
        csv.field(r.scenario)
            .field(r.attack)
            .field(std::string(r.defense_on ? "on" : "off"))
            .field(static_cast<uint64_t>(r.seed))
            .field(r.metrics.tp)
            .field(r.metrics.fp)
            .field(r.metrics.fn)
            .field(r.metrics.precision)
            .field(r.metrics.recall)
            .field(r.metrics.fscore)
            .field(r.metrics.advantage_pct);
        csv.end_row();
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"keystroke timing side-channel simulator"};
    app.require_subcommand(1);

    std::string scenario_name = "x86-t460s";
    std::string config_path;
    std::string out_path;
    std::string attack;
    std::string defense_state = "off";
    uint64_t seed = 1;
    double span_s = 60.0;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--scenario", scenario_name, "built-in scenario name")
            ->check(CLI::IsMember(builtin_scenario_names()));
        cmd->add_option("--config", config_path, "JSON scenario config file");
        auto* o = cmd->add_option("--out", out_path, "output CSV path");
        if (needs_out) o->required();
    };

    // run
    auto* cmd_run = app.add_subcommand("run", "single attack run, one CSV row");
    add_common(cmd_run, true);
    cmd_run->add_option("--attack", attack, "attack name")->required();
    cmd_run->add_option("--defense", defense_state, "on|off")->required();
    cmd_run->add_option("--seed", seed, "run seed");
    cmd_run->add_option("--span-s", span_s, "simulated span in seconds");

    // sweep
    int sweep_seeds = 20;
    int jobs = 0;
    std::vector<std::string> sweep_attacks = kAttackNames;
    auto* cmd_sweep = app.add_subcommand("sweep", "attack x defense x seed grid");
    add_common(cmd_sweep, true);
    cmd_sweep->add_option("--seeds", sweep_seeds, "seeds per cell");
    cmd_sweep->add_option("--attacks", sweep_attacks, "attack names (default: all)");
    cmd_sweep->add_option("--span-s", span_s, "simulated span in seconds");
    cmd_sweep->add_option("--jobs", jobs, "parallel workers (0 = all cores)");

    // multitrace
    int reps = 20;
    double sigma_ms = 40.0;
    int n_keys = 8;
    double mt_span_s = 2.0;
    std::string profile_out;
    int profile_traces = 10000;
    auto* cmd_mt = app.add_subcommand("multitrace", "repeated-password trace analysis");
    add_common(cmd_mt, true);
    cmd_mt->add_option("--reps", reps, "repetitions");
    cmd_mt->add_option("--sigma-ms", sigma_ms, "typing std in ms");
    cmd_mt->add_option("--keys", n_keys, "keystrokes per trace");
    cmd_mt->add_option("--span-s", mt_span_s, "trace span in seconds");
    cmd_mt->add_option("--defense", defense_state, "on|off");
    cmd_mt->add_option("--seed", seed, "experiment seed");
    cmd_mt->add_option("--profile-out", profile_out, "averaged profile CSV (plot data)");
    cmd_mt->add_option("--profile-traces", profile_traces, "traces averaged for --profile-out");

    // dump-trace
    auto* cmd_dump = app.add_subcommand("dump-trace", "raw attacker probe trace CSV");
    add_common(cmd_dump, true);
    cmd_dump->add_option("--attack", attack, "attack name")->required();
    cmd_dump->add_option("--defense", defense_state, "on|off");
    cmd_dump->add_option("--seed", seed, "run seed");
    cmd_dump->add_option("--span-s", span_s, "simulated span in seconds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            Scenario sc = resolve_scenario(scenario_name, config_path);
            RunReport rep = run(sc, attack, parse_defense(defense_state), seed,
                                Duration::seconds(span_s));
            CsvWriter csv(out_path);
            write_report_rows(csv, {rep});
            std::fprintf(stderr, "%s %s defense=%s seed=%llu F=%.4f (%.1f ms)\n", sc.name.c_str(),
                         attack.c_str(), defense_state.c_str(),
                         static_cast<unsigned long long>(seed), rep.metrics.fscore,
                         rep.runtime_ms);
        } else if (cmd_sweep->parsed()) {
            Scenario sc = resolve_scenario(scenario_name, config_path);
            auto rows = sweep(sc, sweep_attacks, sweep_seeds, Duration::seconds(span_s), jobs);
            CsvWriter csv(out_path);
            write_report_rows(csv, rows);
            std::printf("%-18s %-8s %10s %14s %10s\n", "attack", "defense", "mean F",
                        "adv vs a1 (%)", "published");
            for (const auto& s : summarize(rows)) {
                auto t = sc.targets.find(s.attack);
                char pub[16] = "-";
                if (t != sc.targets.end())
                    std::snprintf(pub, sizeof pub, "%.2f",
                                  s.defense_on ? t->second.fscore_on : t->second.fscore_off);
                std::printf("%-18s %-8s %10.4f %14.1f %10s\n", s.attack.c_str(),
                            s.defense_on ? "on" : "off", s.mean_fscore, s.mean_advantage_pct, pub);
            }
        } else if (cmd_mt->parsed()) {
            PasswordAttackParams params;
            params.n_keys = n_keys;
            params.span = Duration::seconds(mt_span_s);
            params.sigma = Duration::ns(static_cast<int64_t>(sigma_ms * 1e6));
            params.defense.enabled = parse_defense(defense_state);
            Rng gen(seed);

            if (!profile_out.empty()) {
                Rng pgen = gen.derive("profile");
                auto [traces, truth] = simulate_password_traces(params, profile_traces, pgen);
                DensityProfile prof = average_aligned(traces, params.bin, params.span);
                CsvWriter pcsv(profile_out);
                pcsv.header("bin_start_ns,mass");
                for (size_t i = 0; i < prof.mass.size(); ++i) {
                    pcsv.field(static_cast<int64_t>(i) * prof.bin.nanos()).field(prof.mass[i]);
                    pcsv.end_row();
                }
            }

            RequiredTracesResult res = required_traces(params, gen, reps);
            CsvWriter csv(out_path);
            csv.header("rep,required_traces,success_at_1825,censored");
            for (size_t i = 0; i < res.per_rep.size(); ++i) {
                csv.field(static_cast<int64_t>(i))
                    .field(static_cast<int64_t>(res.per_rep[i]))
                    .field(res.per_rep[i] <= params.threshold_traces &&
                           !static_cast<bool>(res.censored[i]))
                    .field(static_cast<bool>(res.censored[i]));
                csv.end_row();
            }
            std::printf("required traces: mean %.1f (q25 %d, median %d, q75 %d), %s %d\n",
                        res.mean, res.q25, res.median, res.q75,
                        res.exceeds_threshold ? "exceeds" : "below", params.threshold_traces);
        } else if (cmd_dump->parsed()) {
            Scenario sc = resolve_scenario(scenario_name, config_path);
            ProbeTrace trace = dump_trace(sc, attack, parse_defense(defense_state), seed,
                                          Duration::seconds(span_s));
            CsvWriter csv(out_path);
            csv.header("t_ns,value");
            for (const auto& [t, v] : trace.samples) {
                csv.field(t.nanos()).field(v);
                csv.end_row();
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
