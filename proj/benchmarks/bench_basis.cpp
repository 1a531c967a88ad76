#include <benchmark/benchmark.h>

#include "lsd/basis.hpp"
#include "lsd/operators.hpp"
#include "lsd/spectral.hpp"

using namespace lsd;

namespace {

std::vector<basis::MeanVector> random_means(std::size_t m, SeededRng& rng) {
    std::vector<basis::MeanVector> means;
    for (const auto& key : basis::processing_order(10, m / 10)) {
        basis::MeanVector mv{key, std::vector<double>(m)};
        for (auto& v : mv.values) v = rng.normal();
        means.push_back(std::move(mv));
    }
    return means;
}

void BM_GramSchmidt(benchmark::State& state) {
    SeededRng rng(3);
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto means = random_means(m, rng);
    for (auto _ : state) benchmark::DoNotOptimize(basis::gram_schmidt(means, static_cast<double>(m)));
}
BENCHMARK(BM_GramSchmidt)->Arg(20)->Arg(100);

void BM_ClassifyLsd(benchmark::State& state) {
    SeededRng rng(4);
    const auto b = basis::gram_schmidt(random_means(100, rng), 100.0);
    const TensorF z = rng.normal_tensor<float>(1000, 100);
    for (auto _ : state) {
        for (std::size_t r = 0; r < z.rows(); ++r) benchmark::DoNotOptimize(spectral::classify_lsd(z.row(r), b));
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ClassifyLsd);

void BM_RotationApply(benchmark::State& state) {
    SeededRng rng(5);
    const auto b = basis::gram_schmidt(random_means(100, rng), 100.0);
    const auto r = ops::rotation(b, 0, 1, 0.0, 0.5);
    const Eigen::VectorXd z = b.vector(0);
    for (auto _ : state) benchmark::DoNotOptimize(r.apply(z));
}
BENCHMARK(BM_RotationApply);

}  // namespace
