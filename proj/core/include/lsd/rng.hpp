#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

#include "lsd/tensor.hpp"

namespace lsd {

/// Reproducible random stream: std::mt19937_64 seeded with a 64-bit value,
/// normals from std::normal_distribution<double>. Identical seeds give
/// identical streams on one platform/standard library.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Independent stream for a named purpose, keyed by extra integers
    /// (label, set index, trial, image index, ...). The derived seed is a
    /// splitmix64 fold of the root seed, an FNV-1a hash of the purpose and
    /// each key in order.
    static SeededRng derive(std::uint64_t root, std::string_view purpose, std::initializer_list<std::uint64_t> keys = {});
    static std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                     std::initializer_list<std::uint64_t> keys = {});

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    double normal() { return normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

    /// (rows, cols) tensor of N(0, 1) draws, filled row-major.
    template <typename T>
    Tensor<T> normal_tensor(std::size_t rows, std::size_t cols) {
        Tensor<T> out({rows, cols});
        for (auto& v : out.storage()) v = static_cast<T>(normal());
        return out;
    }

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace lsd
