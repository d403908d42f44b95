#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shb/analysis.hpp"
#include "shb/dynamics.hpp"
#include "shb/heavyball.hpp"
#include "shb/json_io.hpp"

namespace shb {

enum class ExitCode : int { ok = 0, failure = 1, validation = 2, divergence = 3, capability = 4 };

struct InitSpec {
    enum class Mode { fixed, uniform_box };
    Mode mode = Mode::uniform_box;
    Vec w0, y0, w1;                 // fixed mode; w1 selects the (w_1, w_0) convention
    std::optional<double> lo, hi;   // uniform_box; defaults to the problem box
};

struct DiSpec {
    double h = 1e-3;
    double T = 20.0;
    DiSelector selector = DiSelector::least_norm;
    std::optional<Vec> w0, y0;
    double window = 5.0;
};

struct ExperimentConfig {
    std::string kind = "run";
    std::string problem = "abs1d";
    ScheduleFamily family = ScheduleFamily::power;
    double a = 1.0, gamma = 0.75, r = 1.0;
    Form form = Form::A;
    KinkRule policy = KinkRule::zero;
    InitSpec init;
    std::uint64_t seed = 1;
    std::size_t K = 100000;
    std::size_t n_seeds = 1;
    ReportParams analysis;
    double noise_tail_tol = 0.05;
    DiSpec di;
    AvoidanceParams avoidance;
    std::optional<Vec> adversarial_anchor;
    double check_scale = 1.0;
    Execution execution = Execution::parallel;
    bool write_runs = false;   // per-seed run.csv in sweeps
    std::string out = "out";

    json resolved;   // the full document after defaults and overrides

    StepSchedule schedule() const { return StepSchedule::make(family, a, gamma, r); }
};

json default_config();
/// Applies "dotted.key=value"; value is parsed as JSON, falling back to a string.
void apply_override(json& doc, std::string_view assignment);
/// Typed view of a config document; validates every field and the schedule.
ExperimentConfig parse_config(const json& doc);

/// Initial condition of run `index` (the uniform box mode draws from a
/// stream derived from the run seed).
Init make_init(const ExperimentConfig& cfg, const StochasticProblem& pb, std::uint64_t run_seed);

struct SeedSummary {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::ok;
    std::string message;
    std::optional<double> final_clarke_gap;
    double final_df_gap = 0.0;
    double final_y_norm = 0.0;
    double oscillation = 0.0;
    double noise_tail_sup = 0.0;
    bool essential_criticality = false;
    bool velocity_bound = false;
    std::size_t candidates = 0;
};

/// One seed of a sweep: run plus analysis. Divergence is recorded, not thrown.
SeedSummary summarize_seed(const ExperimentConfig& cfg, const StochasticProblem& pb, std::size_t index,
                           RunRecord* keep = nullptr, AccumulationReport* report = nullptr);

struct SweepResult {
    std::vector<SeedSummary> seeds;
    json aggregate;
};
SweepResult sweep(const ExperimentConfig& cfg, const StochasticProblem& pb, Execution exec);

/// Runs the configured experiment, writing outputs and a manifest under cfg.out.
/// Library errors propagate; the CLI maps them to exit codes.
ExitCode run_experiment(const ExperimentConfig& cfg, const std::string& command_line, std::ostream& log);

} // namespace shb
