#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lsd/models.hpp"
#include "lsd/rng.hpp"

namespace lsd::basis {

enum class SetSource { encoded, sampled };

/// (label, set index). Set indices are 1-based; set 1 is the encoded set.
struct SetKey {
    std::size_t label = 0;
    std::size_t set_index = 1;

    friend bool operator==(const SetKey&, const SetKey&) = default;
};

/// V latent vectors that all decode to `label` under the frozen G and C.
struct LatentSet {
    SetKey key;
    SetSource source = SetSource::sampled;
    TensorF vectors;  // (V, M)

    std::size_t size() const { return vectors.empty() ? 0 : vectors.rows(); }
};

struct MeanVector {
    SetKey key;
    std::vector<double> values;
};

/// M orthogonal latent directions with <xi_a|xi_b> = C delta_ab, stored as
/// rows, plus the (label, set) of the mean vector each one came from.
class QuasiEigenBasis {
public:
    QuasiEigenBasis(std::size_t labels, std::size_t sets, double norm_constant, Eigen::MatrixXd vectors,
                    std::vector<SetKey> index_map);

    std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
    std::size_t labels() const { return labels_; }
    std::size_t sets() const { return sets_; }
    double norm_constant() const { return norm_constant_; }
    const Eigen::MatrixXd& vectors() const { return vectors_; }
    Eigen::VectorXd vector(std::size_t k) const { return vectors_.row(static_cast<Eigen::Index>(k)).transpose(); }
    const std::vector<SetKey>& index_map() const { return index_map_; }
    SetKey key(std::size_t k) const { return index_map_.at(k); }
    /// Flat index of (label, set); throws if absent.
    std::size_t flat_index(std::size_t label, std::size_t set_index) const;
    std::uint64_t id() const { return id_; }

    /// max_ab |<xi_a|xi_b>/C - delta_ab|, computed at construction.
    double orthogonality_error() const { return orthogonality_error_; }
    /// Throws DataError when the orthogonality error exceeds tolerance.
    void ensure_valid(double tolerance = 1e-8) const;

    friend bool operator==(const QuasiEigenBasis& a, const QuasiEigenBasis& b) {
        return a.labels_ == b.labels_ && a.sets_ == b.sets_ && a.norm_constant_ == b.norm_constant_ &&
               a.vectors_ == b.vectors_ && a.index_map_ == b.index_map_;
    }

private:
    std::size_t labels_;
    std::size_t sets_;
    double norm_constant_;
    Eigen::MatrixXd vectors_;
    std::vector<SetKey> index_map_;
    std::uint64_t id_ = 0;
    double orthogonality_error_ = 0.0;
};

/// Set-major, label-minor: (0,1), (1,1), ..., (l-1,1), (0,2), ...
std::vector<SetKey> processing_order(std::size_t labels, std::size_t sets);

/// Encodes training images of ground-truth label `label` (rng-shuffled, each
/// image once), decodes and classifies them, keeping z whose round-trip label
/// is `label`. Throws DataError when fewer than V qualify.
LatentSet collect_encoded_set(const TensorF& images, std::span<const std::size_t> image_labels,
                              const models::Model& encoder, const models::Model& generator,
                              const models::Model& classifier, std::size_t label, std::size_t count, SeededRng& rng);

struct SampledSetOptions {
    /// Optional minimum classifier probability for acceptance (0 = plain argmax).
    double min_probability = 0.0;
    std::size_t chunk = 256;
    /// Abort when fewer than min_accepts acceptances occur in the last `window` draws.
    std::size_t window = 100000;
    std::size_t min_accepts = 10;
};

/// Rejection-samples z ~ N(0, I_M) until `count` have argmax C(G(z)) == label.
LatentSet collect_sampled_set(const models::Model& generator, const models::Model& classifier, std::size_t label,
                              std::size_t set_index, std::size_t count, SeededRng& rng,
                              const SampledSetOptions& options = {});

/// Coordinate-wise mean in double, summed in row order.
MeanVector average_set(const LatentSet& set);

struct ConvergenceRow {
    std::size_t prefix;
    std::vector<double> mean;
    std::vector<double> stddev;
    /// Mean over coordinates of stddev / sqrt(prefix).
    double mean_sem;
};

/// Running mean/std of the first `prefix` members for each requested prefix.
std::vector<ConvergenceRow> convergence_check(const LatentSet& set, std::span<const std::size_t> prefixes);

/// Modified Gram-Schmidt with one re-orthogonalization pass over the means in
/// the given order; every output is scaled to squared norm C. Throws
/// DataError naming the (label, set) whose residual falls below 1e-8 of its
/// input norm.
QuasiEigenBasis gram_schmidt(std::span<const MeanVector> means, double norm_constant);

/// All pairwise inner products of the rows of `vectors`.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& vectors);

/// Means as matrix rows, in the given order.
Eigen::MatrixXd stack_means(std::span<const MeanVector> means);

struct LabelHistogram {
    std::size_t label;
    std::vector<double> centers;
    std::vector<double> density;
    std::vector<double> normal_pdf;
    std::size_t samples = 0;
};

inline constexpr std::size_t kHistogramBins = 121;
inline constexpr double kHistogramLimit = 6.0;

/// Per-label density of all latent coordinates pooled over the label's sets,
/// 121 bins centred on -6.0, -5.9, ..., 6.0. Values outside the range land
/// in the end bins.
std::vector<LabelHistogram> label_pdf_histograms(std::span<const LatentSet> sets, std::size_t labels);

inline constexpr std::uint32_t kBasisVersion = 1;

/// LSDB: "LSDB" | u32 version | u32 M | u32 l | u32 n | f64 C |
///       M x (u32 label, u32 set_index) | M*M f64 row-major (row k = xi_k).
std::vector<std::uint8_t> serialize_basis(const QuasiEigenBasis& basis);
QuasiEigenBasis deserialize_basis(const std::vector<std::uint8_t>& bytes);
void save_basis(const QuasiEigenBasis& basis, const std::filesystem::path& path);
QuasiEigenBasis load_basis(const std::filesystem::path& path);

}  // namespace lsd::basis
