#include <benchmark/benchmark.h>

#include "ticketlab/conv.hpp"
#include "ticketlab/dataset.hpp"
#include "ticketlab/gram.hpp"
#include "ticketlab/orcnn.hpp"
#include "ticketlab/rng.hpp"
#include "ticketlab/spectral.hpp"

using namespace ticketlab;

namespace {

ConvTensor random_kernel(std::size_t c, std::size_t s, RandomStream& rng) {
  ConvTensor w = ConvTensor::make_1d(c, c, s);
  for (double& v : w.values()) v = rng.normal();
  return w;
}

FeatureMap random_map(std::size_t c, std::size_t d, RandomStream& rng) {
  FeatureMap x(c, d);
  for (double& v : x.values()) v = rng.normal();
  return x;
}

PatchData orcnn_data(std::size_t n) {
  DatasetConfig dc;
  dc.kind = "orcnn-normalized";
  dc.count = n;
  const Dataset d = gen_dataset(dc, 0);
  return make_patch_data(d.inputs, d.targets, dc.half_width);
}

}  // namespace

static void BM_CircConv(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  RandomStream rng(0, "bench.conv");
  const ConvTensor w = random_kernel(c, 2, rng);
  const FeatureMap x = random_map(c, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(circ_conv(w, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 5 * 64));
}
BENCHMARK(BM_CircConv)->Arg(8)->Arg(32)->Arg(64);

static void BM_SpectralConv(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  RandomStream rng(0, "bench.conv");
  const ConvTensor w = random_kernel(c, 2, rng);
  const FeatureMap x = random_map(c, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_conv(w, x));
}
BENCHMARK(BM_SpectralConv)->Arg(8)->Arg(32);

static void BM_DftRoundTrip(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  RandomStream rng(0, "bench.dft");
  const FeatureMap x = random_map(16, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dft_inverse(dft_forward(x)));
}
BENCHMARK(BM_DftRoundTrip)->Arg(16)->Arg(64)->Arg(128);

static void BM_GramEmpirical(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const PatchData data = orcnn_data(8);
  RandomStream rng(0, "bench.gram");
  const Orcnn model = Orcnn::random(m, 4, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gram_empirical(model, data));
}
BENCHMARK(BM_GramEmpirical)->Arg(256)->Arg(2048);

static void BM_GramInfty(benchmark::State& state) {
  const PatchData data = orcnn_data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lambda0(gram_infty(data, 1.0)));
}
BENCHMARK(BM_GramInfty)->Arg(8)->Arg(32);

static void BM_OrcnnLossGrad(benchmark::State& state) {
  const PatchData data = orcnn_data(8);
  RandomStream rng(0, "bench.orcnn");
  const Orcnn model = Orcnn::random(2048, 4, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(orcnn_loss_and_grad(model, data));
}
BENCHMARK(BM_OrcnnLossGrad);

BENCHMARK_MAIN();
