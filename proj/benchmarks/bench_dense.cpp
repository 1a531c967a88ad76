#include <benchmark/benchmark.h>

#include "lsd/losses.hpp"
#include "lsd/models.hpp"
#include "lsd/rng.hpp"

using namespace lsd;

namespace {

void BM_GeneratorForward(benchmark::State& state) {
    SeededRng rng(1);
    const auto g = models::Model::initialize(models::NetworkSpec::generator(100), rng);
    const TensorF z = rng.normal_tensor<float>(static_cast<std::size_t>(state.range(0)), 100);
    for (auto _ : state) benchmark::DoNotOptimize(models::generate(g, z));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratorForward)->Arg(1)->Arg(25)->Arg(500);

void BM_ClassifierTrainStep(benchmark::State& state) {
    SeededRng rng(2);
    auto c = models::Model::initialize(models::NetworkSpec::classifier(), rng);
    const TensorF x = rng.normal_tensor<float>(25, 784);
    std::vector<std::size_t> labels(25);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 10;
    const TensorF onehot = nn::one_hot<float>(labels, 10);
    for (auto _ : state) {
        nn::ForwardTrace<float> trace;
        c.net.forward(x, trace);
        benchmark::DoNotOptimize(nn::backward(c.net, trace, nn::cross_entropy(c.net.logits(trace), onehot)));
    }
    state.SetItemsProcessed(state.iterations() * 25);
}
BENCHMARK(BM_ClassifierTrainStep);

}  // namespace
