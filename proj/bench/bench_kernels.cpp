#include <benchmark/benchmark.h>

#include "hne/graph.hpp"
#include "hne/relational.hpp"
#include "hne/sampler.hpp"
#include "hne/shallow.hpp"

namespace {

const hne::HeteroGraph& bench_graph() {
  static const hne::HeteroGraph g = [] {
    hne::SyntheticSpec spec;
    spec.nodes_per_type = {2000, 2000};
    spec.communities = 4;
    spec.p_in = 0.01;
    spec.p_out = 0.0005;
    spec.link_types = {{0, 1, false}, {0, 0, false}};
    return hne::generate_synthetic(spec, 7).graph;
  }();
  return g;
}

hne::WalkConfig walk_config(const hne::HeteroGraph& g) {
  hne::WalkConfig cfg;
  cfg.walks_per_node = 2;
  cfg.walk_length = 40;
  cfg.metapaths = {hne::MetaPath::resolve(g, 0, {0, 0}), hne::MetaPath::resolve(g, 0, {1})};
  return cfg;
}

void BM_WalksSerial(benchmark::State& state) {
  const auto& g = bench_graph();
  const auto cfg = walk_config(g);
  for (auto _ : state) benchmark::DoNotOptimize(hne::generate_metapath_walks_serial(g, cfg));
}
BENCHMARK(BM_WalksSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_WalksParallel(benchmark::State& state) {
  const auto& g = bench_graph();
  const auto cfg = walk_config(g);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hne::generate_metapath_walks(g, cfg, threads));
}
BENCHMARK(BM_WalksParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

hne::ShallowTrainer make_pte() {
  hne::TrainSpec spec;
  spec.dim = 50;
  spec.edge_samples_per_link = 2.0;
  return hne::ShallowTrainer(bench_graph(), hne::ShallowModelSpec::of(hne::ShallowFamily::pte), spec, {});
}

void BM_SgdEpochSerial(benchmark::State& state) {
  auto trainer = make_pte();
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch_serial());
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * trainer.updates_per_epoch()));
}
BENCHMARK(BM_SgdEpochSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_SgdEpochParallel(benchmark::State& state) {
  auto trainer = make_pte();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch_parallel(threads));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * trainer.updates_per_epoch()));
}
BENCHMARK(BM_SgdEpochParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_TransEEpochSerial(benchmark::State& state) {
  hne::TrainSpec spec;
  hne::RelationalTrainer trainer(bench_graph(), hne::RelationKind::transe, spec);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch_serial());
}
BENCHMARK(BM_TransEEpochSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_TransEEpochParallel(benchmark::State& state) {
  hne::TrainSpec spec;
  hne::RelationalTrainer trainer(bench_graph(), hne::RelationKind::transe, spec);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch_parallel(threads));
}
BENCHMARK(BM_TransEEpochParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
