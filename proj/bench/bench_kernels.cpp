// Serial reference vs OpenMP kernels: backward DP and the batch runner.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <string>

#include "pedas/mpc.hpp"
#include "pedas/planner.hpp"
#include "pedas/sim.hpp"

using namespace pedas;

namespace {

const std::string kData = PEDAS_DATA_DIR;

struct Fixture {
  Scenario route = load_scenario(kData + "/scenarios/urban_highway.json");
  Scenario flat = load_scenario(kData + "/scenarios/flat_cruise.json");
  VehicleModel vm = prepare_vehicle(load_vehicle_spec(kData + "/params/nissan_leaf_like.json"), 0.0, 32.0);
  DpConfig dp = [] {
    DpConfig c;
    c.speed_grid = uniform_speed_grid(28.0, 0.25);
    return c;
  }();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_DpSerial(benchmark::State& state) {
  const auto& f = fixture();
  const auto allowed = allowed_speed_profile(f.route, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(dp_speed_profile_serial(f.route, allowed, f.vm.params, f.vm.coeffs, f.dp));
}

void BM_DpParallel(benchmark::State& state) {
  const auto& f = fixture();
  const auto allowed = allowed_speed_profile(f.route, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(dp_speed_profile(f.route, allowed, f.vm.params, f.vm.coeffs, f.dp));
}

std::vector<BatchJob> baseline_jobs(const Scenario& sc, int n) {
  std::vector<BatchJob> jobs;
  for (int i = 0; i < n; ++i) {
    BatchJob j;
    j.scenario = &sc;
    j.mode = RunMode::Baseline;
    j.driver = driver_for_style(static_cast<DriverStyle>(i % 3));
    j.driver.noise_std = 0.2;
    j.seed = static_cast<std::uint64_t>(i);
    jobs.push_back(j);
  }
  return jobs;
}

void BM_BatchSerial(benchmark::State& state) {
  const auto& f = fixture();
  const auto jobs = baseline_jobs(f.route, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(jobs, f.vm.params, f.vm.coeffs, SimConfig{}));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto& f = fixture();
  const auto jobs = baseline_jobs(f.route, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(jobs, f.vm.params, f.vm.coeffs, SimConfig{}));
}

void BM_MpcStep(benchmark::State& state) {
  const auto& f = fixture();
  MpcConfig cfg;
  HorizonContext ctx;
  ctx.v0 = 15;
  ctx.v_ref = 18;
  ctx.theta.assign(static_cast<std::size_t>(cfg.N), 0.01);
  ctx.v_lo.assign(static_cast<std::size_t>(cfg.N), 0.0);
  ctx.v_hi.assign(static_cast<std::size_t>(cfg.N), 20.0);
  const auto prob = build_ref_tracking_qp(ctx, f.vm.params, f.vm.coeffs, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(solve_mpc(prob, cfg));
}

}  // namespace

BENCHMARK(BM_DpSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchSerial)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MpcStep)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
