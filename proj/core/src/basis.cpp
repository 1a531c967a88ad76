#include "lsd/basis.hpp"

#include <cmath>
#include <cstring>
#include <deque>
#include <numbers>
#include <sstream>

#include "lsd/binary_io.hpp"
#include "lsd/error.hpp"

namespace lsd::basis {

namespace {

std::string key_string(const SetKey& k) {
    return "(label " + std::to_string(k.label) + ", set " + std::to_string(k.set_index) + ")";
}

}  // namespace

QuasiEigenBasis::QuasiEigenBasis(std::size_t labels, std::size_t sets, double norm_constant, Eigen::MatrixXd vectors,
                                 std::vector<SetKey> index_map)
    : labels_(labels), sets_(sets), norm_constant_(norm_constant), vectors_(std::move(vectors)),
      index_map_(std::move(index_map)) {
    const auto m = static_cast<std::size_t>(vectors_.rows());
    if (vectors_.rows() != vectors_.cols() || m == 0) {
        throw ShapeError("basis needs M vectors of length M, got " + std::to_string(vectors_.rows()) + "x" +
                         std::to_string(vectors_.cols()));
    }
    if (index_map_.size() != m) throw ShapeError("basis index map has " + std::to_string(index_map_.size()) + " entries");
    if (!(norm_constant_ > 0.0)) throw ConfigError("basis norm constant must be positive");
    id_ = io::fnv1a(vectors_.data(), sizeof(double) * m * m);
    id_ = io::fnv1a(&norm_constant_, sizeof(double), id_);

    const Eigen::MatrixXd g = vectors_ * vectors_.transpose() / norm_constant_;
    orthogonality_error_ = (g - Eigen::MatrixXd::Identity(vectors_.rows(), vectors_.rows())).cwiseAbs().maxCoeff();
    if (!std::isfinite(orthogonality_error_)) orthogonality_error_ = std::numeric_limits<double>::infinity();
}

std::size_t QuasiEigenBasis::flat_index(std::size_t label, std::size_t set_index) const {
    for (std::size_t k = 0; k < index_map_.size(); ++k) {
        if (index_map_[k].label == label && index_map_[k].set_index == set_index) return k;
    }
    throw ConfigError("basis has no vector for " + key_string({label, set_index}));
}

void QuasiEigenBasis::ensure_valid(double tolerance) const {
    if (!(orthogonality_error_ <= tolerance)) {
        std::ostringstream msg;
        msg << "stale basis: orthogonality error " << orthogonality_error_ << " exceeds " << tolerance;
        throw DataError(msg.str());
    }
}

std::vector<SetKey> processing_order(std::size_t labels, std::size_t sets) {
    std::vector<SetKey> order;
    for (std::size_t i = 1; i <= sets; ++i) {
        for (std::size_t a = 0; a < labels; ++a) order.push_back({a, i});
    }
    return order;
}

LatentSet collect_encoded_set(const TensorF& images, std::span<const std::size_t> image_labels,
                              const models::Model& encoder, const models::Model& generator,
                              const models::Model& classifier, std::size_t label, std::size_t count, SeededRng& rng) {
    if (images.rows() != image_labels.size()) throw ShapeError("image/label count mismatch");
    if (count == 0) throw ConfigError("set size must be >= 1");
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < image_labels.size(); ++i) {
        if (image_labels[i] == label) pool.push_back(i);
    }
    const auto perm = rng.permutation(pool.size());
    const std::size_t m = encoder.spec.output_dim() / 2;
    LatentSet set{{label, 1}, SetSource::encoded, TensorF::matrix(count, m)};

    constexpr std::size_t chunk = 256;
    std::size_t accepted = 0;
    for (std::size_t begin = 0; begin < perm.size() && accepted < count; begin += chunk) {
        const std::size_t end = std::min(perm.size(), begin + chunk);
        std::vector<std::size_t> idx;
        for (std::size_t j = begin; j < end; ++j) idx.push_back(pool[perm[j]]);
        const auto enc = models::encode(encoder, images.gather_rows(idx), rng);
        const auto cls = models::classify(classifier, models::generate(generator, enc.z));
        for (std::size_t r = 0; r < idx.size() && accepted < count; ++r) {
            if (cls.labels[r] != label) continue;
            std::copy(enc.z.row(r).begin(), enc.z.row(r).end(), set.vectors.row(accepted).begin());
            ++accepted;
        }
    }
    if (accepted < count) {
        throw DataError("encoded set for label " + std::to_string(label) + ": only " + std::to_string(accepted) + " of " +
                        std::to_string(count) + " latent vectors qualified after exhausting " +
                        std::to_string(pool.size()) + " training images");
    }
    return set;
}

LatentSet collect_sampled_set(const models::Model& generator, const models::Model& classifier, std::size_t label,
                              std::size_t set_index, std::size_t count, SeededRng& rng,
                              const SampledSetOptions& options) {
    if (count == 0) throw ConfigError("set size must be >= 1");
    if (options.chunk == 0 || options.window < options.chunk) throw ConfigError("bad sampled-set window settings");
    const std::size_t m = generator.spec.input_dim;
    LatentSet set{{label, set_index}, SetSource::sampled, TensorF::matrix(count, m)};

    const std::size_t window_chunks = options.window / options.chunk;
    std::deque<std::size_t> recent;  // acceptances per chunk, newest last
    std::size_t recent_sum = 0;
    std::size_t accepted = 0;
    std::size_t draws = 0;
    while (accepted < count) {
        const TensorF z = rng.normal_tensor<float>(options.chunk, m);
        const auto cls = models::classify(classifier, models::generate(generator, z));
        std::size_t hits = 0;
        for (std::size_t r = 0; r < options.chunk && accepted < count; ++r) {
            if (cls.labels[r] != label) continue;
            if (cls.probabilities(r, label) < options.min_probability) continue;
            std::copy(z.row(r).begin(), z.row(r).end(), set.vectors.row(accepted).begin());
            ++accepted;
            ++hits;
        }
        draws += options.chunk;
        recent.push_back(hits);
        recent_sum += hits;
        if (recent.size() > window_chunks) {
            recent_sum -= recent.front();
            recent.pop_front();
        }
        if (accepted < count && recent.size() == window_chunks && recent_sum < options.min_accepts) {
            throw DataError("sampled set for label " + std::to_string(label) + ": acceptance rate below " +
                            std::to_string(options.min_accepts) + "/" + std::to_string(window_chunks * options.chunk) +
                            " after " + std::to_string(draws) + " draws (" + std::to_string(accepted) +
                            " accepted); generator looks degenerate for this label");
        }
    }
    return set;
}

MeanVector average_set(const LatentSet& set) {
    if (set.size() == 0) throw DataError("cannot average an empty latent set " + key_string(set.key));
    const std::size_t v = set.vectors.rows();
    const std::size_t m = set.vectors.cols();
    MeanVector out{set.key, std::vector<double>(m, 0.0)};
    for (std::size_t r = 0; r < v; ++r) {
        const auto row = set.vectors.row(r);
        for (std::size_t c = 0; c < m; ++c) out.values[c] += static_cast<double>(row[c]);
    }
    for (auto& x : out.values) x /= static_cast<double>(v);
    return out;
}

std::vector<ConvergenceRow> convergence_check(const LatentSet& set, std::span<const std::size_t> prefixes) {
    const std::size_t v = set.size();
    const std::size_t m = v ? set.vectors.cols() : 0;
    std::vector<ConvergenceRow> rows;
    for (std::size_t prefix : prefixes) {
        if (prefix == 0 || prefix > v) {
            throw ConfigError("convergence prefix " + std::to_string(prefix) + " outside [1, " + std::to_string(v) + "]");
        }
        ConvergenceRow row{prefix, std::vector<double>(m, 0.0), std::vector<double>(m, 0.0), 0.0};
        for (std::size_t r = 0; r < prefix; ++r) {
            for (std::size_t c = 0; c < m; ++c) row.mean[c] += set.vectors(r, c);
        }
        for (auto& x : row.mean) x /= static_cast<double>(prefix);
        if (prefix > 1) {
            for (std::size_t r = 0; r < prefix; ++r) {
                for (std::size_t c = 0; c < m; ++c) {
                    const double d = set.vectors(r, c) - row.mean[c];
                    row.stddev[c] += d * d;
                }
            }
            for (auto& x : row.stddev) x = std::sqrt(x / static_cast<double>(prefix - 1));
        }
        double sem = 0.0;
        for (double s : row.stddev) sem += s / std::sqrt(static_cast<double>(prefix));
        row.mean_sem = m ? sem / static_cast<double>(m) : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

QuasiEigenBasis gram_schmidt(std::span<const MeanVector> means, double norm_constant) {
    const std::size_t m = means.size();
    if (m == 0) throw ConfigError("gram_schmidt needs at least one vector");
    std::size_t labels = 0, sets = 0;
    std::vector<SetKey> keys;
    for (const auto& mv : means) {
        if (mv.values.size() != m) {
            throw ShapeError("gram_schmidt needs M vectors of length M: got " + std::to_string(m) + " vectors, " +
                             key_string(mv.key) + " has length " + std::to_string(mv.values.size()));
        }
        labels = std::max(labels, mv.key.label + 1);
        sets = std::max(sets, mv.key.set_index);
        keys.push_back(mv.key);
    }

    const auto dim = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd q(dim, dim);  // orthonormal rows
    for (Eigen::Index k = 0; k < dim; ++k) {
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(means[static_cast<std::size_t>(k)].values.data(), dim);
        const double input_norm = v.norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < k; ++j) v -= q.row(j).dot(v) * q.row(j).transpose();
        }
        const double residual = v.norm();
        if (!(residual > 1e-8 * input_norm) || !std::isfinite(residual)) {
            std::ostringstream msg;
            msg << "gram_schmidt: rank deficiency at " << key_string(keys[static_cast<std::size_t>(k)])
                << " (residual " << residual << " vs input norm " << input_norm << ")";
            throw DataError(msg.str());
        }
        q.row(k) = v.transpose() / residual;
    }
    return QuasiEigenBasis(labels, sets, norm_constant, std::sqrt(norm_constant) * q, std::move(keys));
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& vectors) { return vectors * vectors.transpose(); }

Eigen::MatrixXd stack_means(std::span<const MeanVector> means) {
    if (means.empty()) return {};
    Eigen::MatrixXd out(static_cast<Eigen::Index>(means.size()), static_cast<Eigen::Index>(means[0].values.size()));
    for (std::size_t k = 0; k < means.size(); ++k) {
        if (means[k].values.size() != means[0].values.size()) throw ShapeError("mean vectors differ in length");
        for (std::size_t c = 0; c < means[k].values.size(); ++c) {
            out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = means[k].values[c];
        }
    }
    return out;
}

std::vector<LabelHistogram> label_pdf_histograms(std::span<const LatentSet> sets, std::size_t labels) {
    constexpr double width = 2.0 * kHistogramLimit / static_cast<double>(kHistogramBins - 1);
    std::vector<LabelHistogram> out;
    for (std::size_t a = 0; a < labels; ++a) {
        LabelHistogram h{a, std::vector<double>(kHistogramBins), std::vector<double>(kHistogramBins, 0.0),
                         std::vector<double>(kHistogramBins), 0};
        for (std::size_t b = 0; b < kHistogramBins; ++b) {
            h.centers[b] = -kHistogramLimit + width * static_cast<double>(b);
            h.normal_pdf[b] = std::exp(-0.5 * h.centers[b] * h.centers[b]) / std::sqrt(2.0 * std::numbers::pi);
        }
        for (const auto& s : sets) {
            if (s.key.label != a) continue;
            for (float v : s.vectors.storage()) {
                const double pos = std::round((static_cast<double>(v) + kHistogramLimit) / width);
                const double clamped = std::clamp(pos, 0.0, static_cast<double>(kHistogramBins - 1));
                h.density[static_cast<std::size_t>(clamped)] += 1.0;
                ++h.samples;
            }
        }
        if (h.samples) {
            for (auto& d : h.density) d /= static_cast<double>(h.samples) * width;
        }
        out.push_back(std::move(h));
    }
    return out;
}

// ---------------------------------------------------------------------------
// LSDB files

namespace {
constexpr char kMagic[4] = {'L', 'S', 'D', 'B'};
}

std::vector<std::uint8_t> serialize_basis(const QuasiEigenBasis& basis) {
    const std::size_t m = basis.dim();
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    io::put_u32(out, kBasisVersion);
    io::put_u32(out, static_cast<std::uint32_t>(m));
    io::put_u32(out, static_cast<std::uint32_t>(basis.labels()));
    io::put_u32(out, static_cast<std::uint32_t>(basis.sets()));
    io::put_raw(out, basis.norm_constant());
    for (const auto& k : basis.index_map()) {
        io::put_u32(out, static_cast<std::uint32_t>(k.label));
        io::put_u32(out, static_cast<std::uint32_t>(k.set_index));
    }
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            io::put_raw(out, basis.vectors()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        }
    }
    return out;
}

QuasiEigenBasis deserialize_basis(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not a basis file: missing LSDB magic");
    }
    io::ByteReader in(bytes, "basis file");
    in.skip(4);
    const std::uint32_t version = in.u32();
    if (version != kBasisVersion) throw FormatError("unsupported basis version " + std::to_string(version));
    const std::uint32_t m = in.u32();
    const std::uint32_t labels = in.u32();
    const std::uint32_t sets = in.u32();
    const double c = in.raw<double>();
    if (m == 0) throw FormatError("basis file: zero dimension");
    const std::size_t expected = 8ull * m + 8ull * m * m;
    if (in.remaining() != expected) {
        throw FormatError("basis file: payload length mismatch (expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(in.remaining()) + ")");
    }
    std::vector<SetKey> keys(m);
    for (auto& k : keys) {
        k.label = in.u32();
        k.set_index = in.u32();
    }
    Eigen::MatrixXd v(m, m);
    for (std::uint32_t r = 0; r < m; ++r) {
        for (std::uint32_t col = 0; col < m; ++col) v(r, col) = in.raw<double>();
    }
    return QuasiEigenBasis(labels, sets, c, std::move(v), std::move(keys));
}

void save_basis(const QuasiEigenBasis& basis, const std::filesystem::path& path) {
    io::write_file(path, serialize_basis(basis));
}

QuasiEigenBasis load_basis(const std::filesystem::path& path) { return deserialize_basis(io::read_file(path)); }

}  // namespace lsd::basis
