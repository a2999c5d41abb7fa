// Serial reference vs OpenMP kernels for signatures and k-means assignment.
#include <benchmark/benchmark.h>

#include <random>

#include "orbitsig/orbit_store.hpp"
#include "orbitsig/signature.hpp"

using namespace orbitsig;

namespace {

struct Fixture {
  OrbitStore store;
  Matrix inputs;
  Standardizer std;
  std::vector<std::vector<double>> rows;

  Fixture() {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1);
    const std::size_t dim = 195, k = 24, per_set = 14;
    for (std::size_t s = 0; s < k; ++s) {
      OrbitSet set;
      set.key = "k" + std::to_string(s);
      for (std::size_t j = 0; j < per_set; ++j) {
        SegmentVector v;
        v.kind = FeatureKind::kPLP;
        v.segment = {"u", 0, 1, "x", "s", "d"};
        for (std::size_t i = 0; i < dim; ++i) v.values.push_back(g(rng));
        set.members.push_back(store.pool.vectors.size());
        rows.push_back(v.values);
        store.pool.vectors.push_back(std::move(v));
      }
      store.sets.push_back(set);
    }
    store.scheme = CategoricalScheme{{"label"}};
    inputs = Matrix(1024, dim);
    for (double& v : inputs.data()) v = g(rng);
    std = fit_standardizer(inputs);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_SignatureSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(signature_batch_serial(f.inputs, f.store, f.std, PoolingSpec::histogram(20)));
  }
  state.SetItemsProcessed(state.iterations() * f.inputs.rows());
}

void BM_SignatureParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(signature_batch(f.inputs, f.store, f.std, PoolingSpec::histogram(20)));
  }
  state.SetItemsProcessed(state.iterations() * f.inputs.rows());
}

void BM_KMeansSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(spherical_kmeans_serial(f.rows, 24, 3, 50));
}

void BM_KMeansParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(spherical_kmeans(f.rows, 24, 3, 50));
}

}  // namespace

BENCHMARK(BM_SignatureSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SignatureParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeansSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeansParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
