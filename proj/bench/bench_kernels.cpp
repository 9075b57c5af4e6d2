#include <benchmark/benchmark.h>
#include <omp.h>

#include "dynabench/flow.hpp"
#include "dynabench/world.hpp"

namespace {

using namespace dynabench;

// Two frames of a moving object over a few static discs.
std::pair<GrayImage, GrayImage> scene(int size) {
  sim::TaskSpec task;
  task.clutter_count = 0;
  sim::WorldState state;
  state.ee = {{{0.05, -0.1}, sim::Gripper::Open}};
  state.object.pose = {-0.05, 0.02};
  state.clutter = {{{0.15, 0.15}, 0.03}, {{-0.2, -0.15}, 0.03}};
  const Resolution res{size, size};
  GrayImage a = sim::render(state, task, 0, res);
  state.object.pose = state.object.pose + Vec2{0.02, 0.01};
  GrayImage b = sim::render(state, task, 0, res);
  return {std::move(a), std::move(b)};
}

void BM_DenseFlowParallel(benchmark::State& st) {
  const auto [a, b] = scene(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(flow::dense_flow(a, b));
  st.counters["threads"] = omp_get_max_threads();
}

void BM_DenseFlowReference(benchmark::State& st) {
  const auto [a, b] = scene(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(flow::dense_flow_reference(a, b));
}

void BM_FlowToRgb(benchmark::State& st) {
  const auto [a, b] = scene(static_cast<int>(st.range(0)));
  const flow::FlowField f = flow::dense_flow(a, b);
  const flow::FlowParams p;
  for (auto _ : st) benchmark::DoNotOptimize(flow::flow_to_rgb(f, p));
}

}  // namespace

BENCHMARK(BM_DenseFlowParallel)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseFlowReference)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlowToRgb)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
