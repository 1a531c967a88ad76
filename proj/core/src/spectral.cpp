#include "lsd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lsd/error.hpp"
#include "lsd/operators.hpp"
#include "lsd/training.hpp"

namespace lsd::spectral {

namespace {

constexpr std::size_t kChunk = 500;

std::vector<std::size_t> sort_by_amplitude(const std::vector<double>& c) {
    std::vector<std::size_t> order(c.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(c[a]) > std::abs(c[b]); });
    return order;
}

void check_labels(const TensorF& x, std::span<const std::size_t> labels) {
    if (x.rank() != 2 || x.rows() != labels.size()) throw ShapeError("image/label count mismatch");
}

}  // namespace

Decomposition decompose(std::span<const double> z, const basis::QuasiEigenBasis& basis) {
    basis.ensure_valid();
    if (z.size() != basis.dim()) {
        throw ShapeError("latent of length " + std::to_string(z.size()) + " does not match basis dimension " +
                         std::to_string(basis.dim()));
    }
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    const Eigen::VectorXd c = basis.vectors() * zv / basis.norm_constant();
    Decomposition d{std::vector<double>(c.data(), c.data() + c.size()), {}, basis.id()};
    d.rank_order = sort_by_amplitude(d.coefficients);
    return d;
}

Decomposition decompose(std::span<const float> z, const basis::QuasiEigenBasis& basis) {
    std::vector<double> zd(z.begin(), z.end());
    return decompose(std::span<const double>(zd), basis);
}

std::vector<double> reconstruct(const Decomposition& d, const basis::QuasiEigenBasis& basis, std::size_t keep) {
    if (d.basis_id != basis.id()) throw DataError("decomposition was computed against a different basis");
    const std::size_t m = basis.dim();
    if (keep < 1 || keep > m) {
        throw ConfigError("keep count " + std::to_string(keep) + " outside [1, " + std::to_string(m) + "]");
    }
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < keep; ++j) {
        const std::size_t k = d.rank_order[j];
        z += d.coefficients[k] * basis.vectors().row(static_cast<Eigen::Index>(k)).transpose();
    }
    return {z.data(), z.data() + z.size()};
}

LsdLabel classify_lsd(std::span<const float> z, const basis::QuasiEigenBasis& basis) {
    Decomposition d = decompose(z, basis);
    const std::size_t k = d.rank_order.front();
    return {basis.key(k).label, k, basis.key(k), std::move(d)};
}

std::size_t rank_of_truth(const Decomposition& d, std::size_t true_label, const basis::QuasiEigenBasis& basis) {
    if (true_label >= basis.labels()) throw ConfigError("label " + std::to_string(true_label) + " out of range");
    for (std::size_t j = 0; j < d.rank_order.size(); ++j) {
        if (basis.key(d.rank_order[j]).label == true_label) return j + 1;
    }
    throw DataError("basis has no vector for label " + std::to_string(true_label));
}

std::size_t rank_of_truth(std::span<const float> z, std::size_t true_label, const basis::QuasiEigenBasis& basis) {
    return rank_of_truth(decompose(z, basis), true_label, basis);
}

TensorF encode_dataset(const models::Model& encoder, const TensorF& images, std::uint64_t seed, std::size_t trial) {
    const std::size_t m = encoder.spec.output_dim() / 2;
    TensorF out = TensorF::matrix(images.rows(), m);
    for (std::size_t begin = 0; begin < images.rows(); begin += kChunk) {
        const std::size_t end = std::min(images.rows(), begin + kChunk);
        TensorF eps = TensorF::matrix(end - begin, m);
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = SeededRng::derive(seed, "lsd-encode", {trial, i});
            for (auto& v : eps.row(i - begin)) v = static_cast<float>(rng.normal());
        }
        const auto enc = models::encode_with_noise(encoder, images.slice_rows(begin, end), eps);
        std::copy(enc.z.storage().begin(), enc.z.storage().end(), out.storage().begin() + begin * m);
    }
    return out;
}

double LsdEvaluation::accuracy(std::span<const std::size_t> labels) const {
    if (labels.size() != predicted.size() || labels.empty()) throw ShapeError("label count mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double LsdEvaluation::set1_fraction() const {
    if (top_set_index.empty()) return 0.0;
    const auto n = std::count(top_set_index.begin(), top_set_index.end(), std::size_t{1});
    return static_cast<double>(n) / static_cast<double>(top_set_index.size());
}

LsdEvaluation evaluate_latents(const TensorF& latents, std::span<const std::size_t> labels,
                               const basis::QuasiEigenBasis& basis) {
    check_labels(latents, labels);
    LsdEvaluation ev;
    for (std::size_t i = 0; i < latents.rows(); ++i) {
        const Decomposition d = decompose(latents.row(i), basis);
        const std::size_t top = d.rank_order.front();
        ev.predicted.push_back(basis.key(top).label);
        ev.top_set_index.push_back(basis.key(top).set_index);
        ev.truth_rank.push_back(rank_of_truth(d, labels[i], basis));
        std::vector<double> amps(d.rank_order.size());
        const double mx = std::abs(d.coefficients[top]);
        for (std::size_t j = 0; j < amps.size(); ++j) {
            amps[j] = mx > 0.0 ? std::abs(d.coefficients[d.rank_order[j]]) / mx : 0.0;
        }
        ev.normalized_amplitudes.push_back(std::move(amps));
    }
    return ev;
}

std::vector<double> cumulative_curve(std::span<const std::size_t> truth_ranks, std::size_t dim) {
    std::vector<std::size_t> counts(dim + 1, 0);
    for (auto r : truth_ranks) {
        if (r < 1 || r > dim) throw ConfigError("truth rank " + std::to_string(r) + " outside [1, M]");
        ++counts[r];
    }
    std::vector<double> curve(dim);
    std::size_t running = 0;
    for (std::size_t n = 1; n <= dim; ++n) {
        running += counts[n];
        curve[n - 1] = static_cast<double>(running) / static_cast<double>(truth_ranks.size());
    }
    return curve;
}

std::vector<double> cumulative_topn(const TensorF& images, std::span<const std::size_t> labels,
                                    const basis::QuasiEigenBasis& basis, const models::Model& encoder,
                                    std::uint64_t seed) {
    const auto ev = evaluate_latents(encode_dataset(encoder, images, seed, 0), labels, basis);
    return cumulative_curve(ev.truth_rank, basis.dim());
}

RankProfiles amplitude_rank_profiles(const LsdEvaluation& ev) {
    RankProfiles out;
    out.group_sizes.assign(3, 0);
    // counts[group][amplitude rank 2..4][bin]
    std::vector<std::vector<std::vector<double>>> counts(
        3, std::vector<std::vector<double>>(3, std::vector<double>(kProfileBins, 0.0)));
    for (std::size_t i = 0; i < ev.truth_rank.size(); ++i) {
        const std::size_t tr = ev.truth_rank[i];
        if (tr < 1 || tr > 3) continue;
        ++out.group_sizes[tr - 1];
        const auto& amps = ev.normalized_amplitudes[i];
        for (std::size_t j = 0; j < amps.size(); ++j) out.rows.push_back({i, tr, j + 1, amps[j]});
        for (std::size_t ar = 2; ar <= 4 && ar <= amps.size(); ++ar) {
            auto bin = static_cast<std::size_t>(amps[ar - 1] * static_cast<double>(kProfileBins));
            bin = std::min(bin, kProfileBins - 1);
            counts[tr - 1][ar - 2][bin] += 1.0;
        }
    }
    const double width = 1.0 / static_cast<double>(kProfileBins);
    for (std::size_t g = 0; g < 3; ++g) {
        for (std::size_t ar = 0; ar < 3; ++ar) {
            for (std::size_t b = 0; b < kProfileBins; ++b) {
                const double n = static_cast<double>(out.group_sizes[g]);
                out.pdfs.push_back({g + 1, ar + 2, (static_cast<double>(b) + 0.5) * width,
                                    n > 0 ? counts[g][ar][b] / (n * width) : 0.0});
            }
        }
    }
    return out;
}

RankProfiles amplitude_rank_profiles(const TensorF& images, std::span<const std::size_t> labels,
                                     const basis::QuasiEigenBasis& basis, const models::Model& encoder,
                                     std::uint64_t seed) {
    return amplitude_rank_profiles(evaluate_latents(encode_dataset(encoder, images, seed, 0), labels, basis));
}

TensorF denoise(const TensorF& images, const models::Model& encoder, const models::Model& generator,
                const basis::QuasiEigenBasis& basis, SeededRng& rng, const DenoiseOptions& options) {
    const std::size_t m = basis.dim();
    for (auto k : options.keep) {
        if (k < 1 || k > m) throw ConfigError("keep count " + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");
    }
    const std::size_t per = 2 + options.keep.size();
    const auto enc = models::encode(encoder, images, rng);
    TensorF latents = TensorF::matrix(images.rows() * (per - 1), m);
    for (std::size_t i = 0; i < images.rows(); ++i) {
        const Decomposition d = decompose(enc.z.row(i), basis);
        for (std::size_t j = 0; j <= options.keep.size(); ++j) {
            // j == 0 is the full-M expansion, never renormalized.
            std::vector<double> zt = reconstruct(d, basis, j == 0 ? m : options.keep[j - 1]);
            if (j > 0 && options.renormalize) {
                const Eigen::Map<const Eigen::VectorXd> zv(zt.data(), static_cast<Eigen::Index>(m));
                const Eigen::VectorXd r = ops::renormalize(zv, static_cast<double>(m));
                zt.assign(r.data(), r.data() + r.size());
            }
            auto dst = latents.row(i * (per - 1) + j);
            for (std::size_t c = 0; c < m; ++c) dst[c] = static_cast<float>(zt[c]);
        }
    }
    const TensorF decoded = models::generate(generator, latents);
    const std::size_t d = images.cols();
    TensorF out = TensorF::matrix(images.rows() * per, d);
    for (std::size_t i = 0; i < images.rows(); ++i) {
        std::copy(images.row(i).begin(), images.row(i).end(), out.row(i * per).begin());
        for (std::size_t j = 0; j + 1 < per; ++j) {
            const auto src = decoded.row(i * (per - 1) + j);
            std::copy(src.begin(), src.end(), out.row(i * per + 1 + j).begin());
        }
    }
    return out;
}

EnsembleResult ensemble_accuracy(const TensorF& images, std::span<const std::size_t> labels, std::size_t trials,
                                 const models::Model& encoder, const models::Model& generator,
                                 const models::Model& classifier, const basis::QuasiEigenBasis& basis,
                                 std::uint64_t seed) {
    check_labels(images, labels);
    if (trials == 0) throw ConfigError("trials must be >= 1");
    EnsembleResult out;
    const double clf = training::classifier_accuracy(classifier, images, labels);
    for (std::size_t t = 0; t < trials; ++t) {
        const TensorF z = encode_dataset(encoder, images, seed, t);
        LsdEvaluation ev = evaluate_latents(z, labels, basis);
        std::size_t correct = 0;
        for (std::size_t begin = 0; begin < z.rows(); begin += kChunk) {
            const std::size_t end = std::min(z.rows(), begin + kChunk);
            const auto c = models::classify(classifier, models::generate(generator, z.slice_rows(begin, end)));
            for (std::size_t i = begin; i < end; ++i) correct += c.labels[i - begin] == labels[i];
        }
        out.trials.push_back({t, ev.accuracy(labels), static_cast<double>(correct) / static_cast<double>(z.rows()), clf});
        if (t == 0) out.first_trial = std::move(ev);
    }
    auto stats = [&](auto field) {
        double mean = 0.0;
        for (const auto& r : out.trials) mean += r.*field;
        mean /= static_cast<double>(trials);
        double var = 0.0;
        for (const auto& r : out.trials) var += (r.*field - mean) * (r.*field - mean);
        const double sd = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
        return std::pair{mean, sd};
    };
    const auto [lm, ls] = stats(&TrialAccuracy::lsd);
    const auto [em, es] = stats(&TrialAccuracy::encode_decode);
    const auto [cm, cs] = stats(&TrialAccuracy::classifier);
    out.mean = {trials, lm, em, cm};
    out.stddev = {trials, ls, es, cs};
    return out;
}

}  // namespace lsd::spectral
