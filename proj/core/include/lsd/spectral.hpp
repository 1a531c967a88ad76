#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsd/basis.hpp"
#include "lsd/models.hpp"

namespace lsd::spectral {

/// Coefficients c_k = <xi_k|z> / C of one latent vector, with the indices
/// sorted by |c_k| descending (ties to the lower index).
struct Decomposition {
    std::vector<double> coefficients;
    std::vector<std::size_t> rank_order;
    std::uint64_t basis_id = 0;
};

Decomposition decompose(std::span<const double> z, const basis::QuasiEigenBasis& basis);
Decomposition decompose(std::span<const float> z, const basis::QuasiEigenBasis& basis);

/// Sum of c_k xi_k over the `keep` largest-amplitude components.
std::vector<double> reconstruct(const Decomposition& d, const basis::QuasiEigenBasis& basis, std::size_t keep);

struct LsdLabel {
    std::size_t label;
    std::size_t flat_index;
    basis::SetKey key;
    Decomposition decomposition;
};

/// Label of the quasi-eigenvector with the largest |c_k|.
LsdLabel classify_lsd(std::span<const float> z, const basis::QuasiEigenBasis& basis);

/// 1-based rank of the highest-ranked basis vector whose label is true_label.
std::size_t rank_of_truth(const Decomposition& d, std::size_t true_label, const basis::QuasiEigenBasis& basis);
std::size_t rank_of_truth(std::span<const float> z, std::size_t true_label, const basis::QuasiEigenBasis& basis);

/// Encodes every image with its own noise stream derived from
/// (seed, "lsd-encode", trial, image index).
TensorF encode_dataset(const models::Model& encoder, const TensorF& images, std::uint64_t seed, std::size_t trial);

struct LsdEvaluation {
    std::vector<std::size_t> predicted;       // LSD label per image
    std::vector<std::size_t> truth_rank;      // rank_of_truth per image
    std::vector<std::size_t> top_set_index;   // set index of the largest-amplitude vector
    std::vector<std::vector<double>> normalized_amplitudes;  // |c| sorted descending / max

    double accuracy(std::span<const std::size_t> labels) const;
    /// Fraction of images whose largest-amplitude vector lies in set 1.
    double set1_fraction() const;
};

LsdEvaluation evaluate_latents(const TensorF& latents, std::span<const std::size_t> labels,
                               const basis::QuasiEigenBasis& basis);

/// P(rank_of_truth <= n) for n = 1..M.
std::vector<double> cumulative_curve(std::span<const std::size_t> truth_ranks, std::size_t dim);

/// Encodes the test set once (trial 0 streams) and returns the cumulative
/// top-n curve.
std::vector<double> cumulative_topn(const TensorF& images, std::span<const std::size_t> labels,
                                    const basis::QuasiEigenBasis& basis, const models::Model& encoder,
                                    std::uint64_t seed);

struct ProfileRow {
    std::size_t image_id;
    std::size_t truth_rank;
    std::size_t rank;
    double normalized_amplitude;
};

struct ProfilePdfRow {
    std::size_t truth_rank;
    std::size_t amplitude_rank;
    double bin_center;
    double density;
};

struct RankProfiles {
    std::vector<ProfileRow> rows;
    std::vector<ProfilePdfRow> pdfs;
    std::vector<std::size_t> group_sizes;  // images with truth rank 1, 2, 3
};

inline constexpr std::size_t kProfileBins = 50;

/// Normalized amplitude profiles |c|/max|c| grouped by truth rank 1..3, plus
/// 50-bin densities on [0, 1] of the 2nd, 3rd and 4th amplitudes per group.
RankProfiles amplitude_rank_profiles(const LsdEvaluation& evaluation);
RankProfiles amplitude_rank_profiles(const TensorF& images, std::span<const std::size_t> labels,
                                     const basis::QuasiEigenBasis& basis, const models::Model& encoder,
                                     std::uint64_t seed);

struct DenoiseOptions {
    std::vector<std::size_t> keep{1, 2, 3, 4, 10};
    /// Rescale truncated latents to squared norm M before decoding.
    bool renormalize = false;
};

/// For each image a strip [ground truth, full-M decode, decode at each keep
/// count]; returns (images * (2 + |keep|), d) rows in strip order.
TensorF denoise(const TensorF& images, const models::Model& encoder, const models::Model& generator,
                const basis::QuasiEigenBasis& basis, SeededRng& rng, const DenoiseOptions& options = {});

struct TrialAccuracy {
    std::size_t trial;
    double lsd;
    double encode_decode;
    double classifier;
};

struct EnsembleResult {
    std::vector<TrialAccuracy> trials;
    TrialAccuracy mean;
    TrialAccuracy stddev;
    /// Trial-0 evaluation, reused by the cumulative and profile tables.
    LsdEvaluation first_trial;
};

/// Per-trial LSD accuracy, encode-decode-classify accuracy and classifier
/// baseline over the whole test set; each trial draws fresh encoder noise.
EnsembleResult ensemble_accuracy(const TensorF& images, std::span<const std::size_t> labels, std::size_t trials,
                                 const models::Model& encoder, const models::Model& generator,
                                 const models::Model& classifier, const basis::QuasiEigenBasis& basis,
                                 std::uint64_t seed);

}  // namespace lsd::spectral
