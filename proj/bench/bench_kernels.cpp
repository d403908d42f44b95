#include <benchmark/benchmark.h>

#include <filesystem>

#include "shb/analysis.hpp"
#include "shb/harness.hpp"
#include "shb/problems.hpp"

using namespace shb;

namespace {

Execution mode(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_Avoidance(benchmark::State& state) {
    const StochasticProblem pb = catalog::ell1();
    const StepSchedule sched = StepSchedule::make(ScheduleFamily::power, 1.0, 0.75, 1.0);
    AvoidanceParams params;
    params.n_runs = 64;
    params.K = 2000;
    for (auto _ : state) {
        auto stats = avoidance_experiment(pb, sched, params, mode(state));
        benchmark::DoNotOptimize(stats.hits);
    }
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_Avoidance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
    json doc = default_config();
    apply_override(doc, "problem=toyrelu");
    apply_override(doc, "K=5000");
    apply_override(doc, "n_seeds=32");
    doc["out"] = (std::filesystem::temp_directory_path() / "shb_bench_sweep").string();
    const ExperimentConfig cfg = parse_config(doc);
    const StochasticProblem pb = resolve_problem(cfg.problem);
    for (auto _ : state) {
        auto res = sweep(cfg, pb, mode(state));
        benchmark::DoNotOptimize(res.seeds.size());
    }
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SingleRun(benchmark::State& state) {
    const StochasticProblem pb = catalog::toyrelu();
    const StepSchedule sched = StepSchedule::make(ScheduleFamily::power, 1.0, 0.75, 1.0);
    const Init init = Init::position_velocity(Vec{0.5, -0.5}, Vec{0.0, 0.0});
    for (auto _ : state) {
        auto rec = run(pb, sched, init, SelectionPolicy{}, 1, static_cast<std::size_t>(state.range(0)), Form::A);
        benchmark::DoNotOptimize(rec.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SingleRun)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
