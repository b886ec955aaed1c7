#include <benchmark/benchmark.h>

#include <vector>

#include "gpoid/model.hpp"
#include "gpoid/rng.hpp"
#include "gpoid/smc.hpp"

using namespace gpoid;

namespace {

struct Problem {
  model::LgssModel m;
  model::ParameterVector theta;
  std::vector<double> y, u;
};

Problem make_problem(int T) {
  Problem p;
  p.theta.resize(2);
  p.theta << 0.8, 1.0;
  auto rs = rng::StreamKey(5).child(0).stream();
  p.u.resize(T);
  for (int t = 0; t < T; ++t) p.u[t] = rs.uniform() < 0.5 ? -1.0 : 1.0;
  const auto traj = model::simulate(p.m, p.theta, p.u, rng::StreamKey(5).child(1));
  p.y = traj.outputs;
  return p;
}

void bm_filter(benchmark::State& state, smc::Exec exec) {
  const int T = static_cast<int>(state.range(0));
  const int N = static_cast<int>(state.range(1));
  const auto p = make_problem(T);
  for (auto _ : state) {
    auto ps = smc::bootstrap_pf(p.m, p.theta, p.y, p.u, N, rng::StreamKey(7), exec);
    benchmark::DoNotOptimize(ps.log_weight_sums.sum());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(T) * N);
}

void bm_smoother(benchmark::State& state, smc::Exec exec) {
  const int T = static_cast<int>(state.range(0));
  const int N = static_cast<int>(state.range(1));
  const int M = static_cast<int>(state.range(2));
  const auto p = make_problem(T);
  const auto ps = smc::bootstrap_pf(p.m, p.theta, p.y, p.u, N, rng::StreamKey(7));
  smc::SmootherConfig cfg;
  cfg.M = M;
  for (auto _ : state) {
    auto traj = smc::ffbsi_es(p.m, p.theta, ps, p.u, cfg, rng::StreamKey(9), exec);
    benchmark::DoNotOptimize(traj.states.sum());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(T) * M);
}

void bm_score(benchmark::State& state, smc::Exec exec) {
  const int T = static_cast<int>(state.range(0));
  const auto p = make_problem(T);
  const auto ps = smc::bootstrap_pf(p.m, p.theta, p.y, p.u, 1000, rng::StreamKey(7));
  smc::SmootherConfig cfg;
  cfg.M = 100;
  const auto traj = smc::ffbsi_es(p.m, p.theta, ps, p.u, cfg, rng::StreamKey(9));
  for (auto _ : state) {
    auto est = smc::estimate_score(p.m, p.theta, traj, p.y, p.u, exec);
    benchmark::DoNotOptimize(est.total.sum());
  }
}

}  // namespace

BENCHMARK_CAPTURE(bm_filter, serial, smc::Exec::Serial)->Args({200, 2000})->Args({1000, 2500});
BENCHMARK_CAPTURE(bm_filter, parallel, smc::Exec::Parallel)->Args({200, 2000})->Args({1000, 2500});
BENCHMARK_CAPTURE(bm_smoother, serial, smc::Exec::Serial)->Args({200, 2000, 100});
BENCHMARK_CAPTURE(bm_smoother, parallel, smc::Exec::Parallel)->Args({200, 2000, 100});
BENCHMARK_CAPTURE(bm_score, serial, smc::Exec::Serial)->Arg(500);
BENCHMARK_CAPTURE(bm_score, parallel, smc::Exec::Parallel)->Arg(500);

BENCHMARK_MAIN();
