#pragma once

#include <vector>

#include "lsd/basis.hpp"
#include "lsd/rng.hpp"

namespace lsd::testkit {

/// Random Gaussian mean vectors keyed in processing order (set-major, label-minor).
inline std::vector<basis::MeanVector> random_means(std::size_t labels, std::size_t sets, SeededRng& rng) {
    const std::size_t m = labels * sets;
    std::vector<basis::MeanVector> out;
    for (const auto& key : basis::processing_order(labels, sets)) {
        basis::MeanVector mv{key, std::vector<double>(m)};
        for (auto& v : mv.values) v = rng.normal();
        out.push_back(std::move(mv));
    }
    return out;
}

inline basis::QuasiEigenBasis random_basis(std::size_t labels, std::size_t sets, std::uint64_t seed) {
    SeededRng rng(seed);
    const auto means = random_means(labels, sets, rng);
    return basis::gram_schmidt(means, static_cast<double>(labels * sets));
}

}  // namespace lsd::testkit
