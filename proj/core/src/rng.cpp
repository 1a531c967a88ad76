#include "lsd/rng.hpp"

#include <numeric>

namespace lsd {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t SeededRng::derive_seed(std::uint64_t root, std::string_view purpose,
                                     std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::uint64_t s = splitmix64(root ^ splitmix64(h));
    for (std::uint64_t k : keys) s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
    return s;
}

SeededRng SeededRng::derive(std::uint64_t root, std::string_view purpose, std::initializer_list<std::uint64_t> keys) {
    return SeededRng(derive_seed(root, purpose, keys));
}

std::vector<std::size_t> SeededRng::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = below(i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace lsd
