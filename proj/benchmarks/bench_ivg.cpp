#include <benchmark/benchmark.h>

#include <random>

#include "ivg/clustering.hpp"
#include "ivg/diff.hpp"
#include "ivg/document.hpp"
#include "ivg/pipeline.hpp"
#include "ivg/projection.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace ivg;

namespace {

void BM_Myers(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto len = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> a, b;
  for (std::size_t i = 0; i < len; ++i) {
    a.push_back("w" + std::to_string(rng() % 12));
    b.push_back("w" + std::to_string(rng() % 12));
  }
  for (auto _ : state) benchmark::DoNotOptimize(myers_align(a, b));
}
BENCHMARK(BM_Myers)->Arg(8)->Arg(32)->Arg(128);

std::vector<Vector> random_vectors(std::size_t n) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(seeded_unit_vector(i + 1, kEmbeddingDim));
  return out;
}

void BM_Tsne(benchmark::State& state) {
  const auto vectors = random_vectors(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(project(vectors));
}
BENCHMARK(BM_Tsne)->Arg(32)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_Clustering(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  PointSet pts;
  for (int i = 0; i < state.range(0); ++i) pts.push_back({g(rng), g(rng)});
  for (auto _ : state) benchmark::DoNotOptimize(cluster_average_linkage(pts, 0.8));
}
BENCHMARK(BM_Clustering)->Arg(32)->Arg(60)->Arg(120);

void BM_Pipeline(benchmark::State& state) {
  testing::TempDir dir;
  ProvenanceStore store(dir.path());
  synthetic::SessionSpec spec;
  spec.steps = static_cast<std::size_t>(state.range(0));
  auto session = synthetic::populate(store, spec);
  auto snap = store.snapshot(session.id);
  for (auto _ : state) {
    StubEmbeddingProvider provider;
    auto layout = build_layout(*snap, provider, nullptr, BuildParams{});
    benchmark::DoNotOptimize(layout_document(*layout).dump());
  }
}
BENCHMARK(BM_Pipeline)->Arg(16)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
