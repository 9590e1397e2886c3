#include <benchmark/benchmark.h>

#include <random>

#include "rio/geometry.hpp"
#include "rio/linear_program.hpp"
#include "rio/min_cost_flow.hpp"
#include "rio/signal_timing.hpp"
#include "rio/simulation.hpp"
#include "rio/trajectory.hpp"

namespace {

void BM_AllocationSolve_CaseStudy(benchmark::State& state) {
  const rio::Geometry g = rio::make_case_study();
  const rio::SignalParams p;
  std::vector<std::int64_t> demand(16);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> d(0, 40);
  for (auto& v : demand) v = d(rng);
  for (auto _ : state) {
    const auto net = rio::build_allocation_network(demand, g.phases, p);
    benchmark::DoNotOptimize(rio::solve_phase_allocation(net, g.phases));
  }
}
BENCHMARK(BM_AllocationSolve_CaseStudy);

void BM_OptimizeSpat_Saturated(benchmark::State& state) {
  const rio::Geometry g = rio::make_case_study();
  const rio::SignalParams p;
  rio::DemandSnapshot demand;
  demand.lanes.resize(16);
  int id = 0;
  for (int l = 0; l < 16; ++l) {
    for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
      demand.lanes[l].push_back({id++, l, i % 2 ? rio::VehicleKind::Cav : rio::VehicleKind::Cnv,
                                 static_cast<double>(i)});
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(rio::optimize_spat(demand, g.phases, p, 0.0, 15.0));
  }
}
BENCHMARK(BM_OptimizeSpat_Saturated)->Arg(10)->Arg(40);

void BM_PlanLeadCav(benchmark::State& state) {
  rio::VehicleState v;
  v.kind = rio::VehicleKind::Cav;
  v.d0 = 300.0;
  v.v0 = 9.0;
  const double T = rio::earliest_departure(v, 15.0) * 1.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rio::plan_lead_cav(v, T, 15.0, 9, 20));
  }
}
BENCHMARK(BM_PlanLeadCav);

void BM_GippsEstimate(benchmark::State& state) {
  rio::VehicleState v;
  v.kind = rio::VehicleKind::Cnv;
  v.d0 = 450.0;
  v.v0 = 10.0;
  rio::SampledTrajectory lead_line;
  lead_line.samples.push_back({0.0, 300.0, 11.0, 0.0});
  lead_line.samples.push_back({60.0, 300.0 - 11.0 * 60.0, 11.0, 0.0});
  rio::Trajectory lead{lead_line};
  rio::LeadView view{&lead, 4.5, 40.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rio::estimate_cnv_trajectory(v, view, 15.0));
  }
}
BENCHMARK(BM_GippsEstimate);

void BM_SimulationMinute_850(benchmark::State& state) {
  const rio::Geometry g = rio::make_case_study();
  for (auto _ : state) {
    rio::RunConfig cfg;
    cfg.scenario.volume_vphpl = 850.0;
    cfg.scenario.cav_ratio = 0.5;
    cfg.scenario.duration_s = 60.0;
    benchmark::DoNotOptimize(rio::run_scenario(g, cfg));
  }
}
BENCHMARK(BM_SimulationMinute_850)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
