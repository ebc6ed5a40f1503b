#include <benchmark/benchmark.h>

#include "noma/conic/socp_ipm.hpp"
#include "noma/grouping.hpp"
#include "noma/oracle.hpp"
#include "noma/sca.hpp"
#include "noma/scenario.hpp"
#include "noma/subproblem.hpp"

namespace {

noma::Scenario make_scenario(int clusters) {
  noma::SystemParams params;
  params.num_clusters = clusters;
  params.num_users = 2 * clusters;
  return noma::generate_scenario(params, 1);
}

void BM_BuildSubproblem(benchmark::State& state) {
  noma::Scenario s = make_scenario(static_cast<int>(state.range(0)));
  noma::ClusterAssignment groups = noma::group_users(s.channels);
  noma::ExpansionPoint point = noma::initial_point(s, groups, 1);
  for (auto _ : state) {
    noma::Subproblem sub = noma::build_subproblem(s, groups, point);
    benchmark::DoNotOptimize(sub.program.num_variables());
  }
}
BENCHMARK(BM_BuildSubproblem)->Arg(2)->Arg(5);

void BM_SolveSubproblem(benchmark::State& state) {
  noma::Scenario s = make_scenario(static_cast<int>(state.range(0)));
  noma::ClusterAssignment groups = noma::group_users(s.channels);
  noma::ExpansionPoint point = noma::initial_point(s, groups, 1);
  noma::Subproblem sub = noma::build_subproblem(s, groups, point);
  noma::conic::SocpIpmBackend backend;
  for (auto _ : state) {
    noma::conic::BackendResult res = noma::conic::solve_program(sub.program, backend);
    benchmark::DoNotOptimize(res.objective);
  }
}
BENCHMARK(BM_SolveSubproblem)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_ScaSolve(benchmark::State& state) {
  noma::Scenario s = make_scenario(2);
  noma::ClusterAssignment groups = noma::group_users(s.channels);
  noma::ScaConfig config;
  config.seed = 1;
  noma::conic::SocpIpmBackend backend;
  for (auto _ : state) {
    noma::SolveReport report = noma::solve_maxmin(s, groups, config, backend);
    benchmark::DoNotOptimize(report.gamma);
  }
}
BENCHMARK(BM_ScaSolve)->Unit(benchmark::kMillisecond);

void BM_GridOracle(benchmark::State& state) {
  noma::Scenario s = make_scenario(1);
  noma::ClusterAssignment groups = noma::group_users(s.channels);
  noma::GridSpec spec;
  spec.points_per_power_axis = static_cast<int>(state.range(0));
  spec.points_per_time_axis = spec.points_per_power_axis;
  for (auto _ : state) {
    noma::OracleResult res = noma::grid_maxmin(s, groups, spec);
    benchmark::DoNotOptimize(res.min_rate);
  }
}
BENCHMARK(BM_GridOracle)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
