#include <benchmark/benchmark.h>

#include <vector>

#include "sparsevo/kernels.hpp"
#include "sparsevo/rng.hpp"

namespace {

namespace k = sparsevo::kernels;

struct Inputs {
  static constexpr std::size_t kChannels = 3;
  static constexpr std::size_t kPixels = 224 * 224;
  std::vector<float> a, b, out;
  std::vector<std::uint8_t> mask;

  Inputs() : a(kChannels * kPixels), b(kChannels * kPixels), out(kChannels * kPixels), mask(kPixels) {
    sparsevo::SplitMix64 gen(7);
    for (auto& v : a) v = static_cast<float>(gen.next_unit());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = (gen.next() % 8 == 0) ? static_cast<float>(gen.next_unit()) : a[i];
    for (auto& m : mask) m = gen.next() & 1;
  }
};

const Inputs& inputs() {
  static const Inputs in;
  return in;
}

template <bool Parallel>
void BM_compose(benchmark::State& state) {
  Inputs in = inputs();
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::compose(in.a, in.b, in.mask, Inputs::kChannels, in.out);
    } else {
      k::ref::compose(in.a, in.b, in.mask, Inputs::kChannels, in.out);
    }
    benchmark::DoNotOptimize(in.out.data());
  }
}

template <bool Parallel>
void BM_squared_l2(benchmark::State& state) {
  const Inputs& in = inputs();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? k::omp::squared_l2(in.a, in.b) : k::ref::squared_l2(in.a, in.b));
  }
}

template <bool Parallel>
void BM_count_differing(benchmark::State& state) {
  const Inputs& in = inputs();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? k::omp::count_differing_pixels(in.a, in.b, Inputs::kChannels)
                                      : k::ref::count_differing_pixels(in.a, in.b, Inputs::kChannels));
  }
}

template <bool Parallel>
void BM_matvec(benchmark::State& state) {
  const Inputs& in = inputs();
  const std::size_t classes = 10;
  std::vector<float> weights(classes * in.a.size(), 0.001f);
  std::vector<double> out(classes);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::matvec(weights, in.a, out);
    } else {
      k::ref::matvec(weights, in.a, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_compose<false>)->Name("compose/ref");
BENCHMARK(BM_compose<true>)->Name("compose/omp");
BENCHMARK(BM_squared_l2<false>)->Name("squared_l2/ref");
BENCHMARK(BM_squared_l2<true>)->Name("squared_l2/omp");
BENCHMARK(BM_count_differing<false>)->Name("count_differing_pixels/ref");
BENCHMARK(BM_count_differing<true>)->Name("count_differing_pixels/omp");
BENCHMARK(BM_matvec<false>)->Name("matvec/ref");
BENCHMARK(BM_matvec<true>)->Name("matvec/omp");

BENCHMARK_MAIN();
