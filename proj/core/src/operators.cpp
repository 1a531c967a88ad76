#include "lsd/operators.hpp"

#include <cmath>

#include "lsd/error.hpp"

namespace lsd::ops {

LatentOperator LatentOperator::dense(Eigen::MatrixXd matrix, std::uint64_t basis_id) {
    if (matrix.rows() != matrix.cols()) throw ShapeError("latent operator must be square");
    LatentOperator op;
    op.dense_ = std::move(matrix);
    op.basis_id_ = basis_id;
    return op;
}

LatentOperator LatentOperator::rank_one(Eigen::VectorXd left, Eigen::VectorXd right, double scale,
                                        std::uint64_t basis_id) {
    if (left.size() != right.size()) throw ShapeError("rank-one operator vectors differ in length");
    LatentOperator op;
    op.left_ = std::move(left);
    op.right_ = std::move(right);
    op.scale_ = scale;
    op.basis_id_ = basis_id;
    return op;
}

std::size_t LatentOperator::dim() const {
    return static_cast<std::size_t>(dense_ ? dense_->rows() : left_.size());
}

Eigen::VectorXd LatentOperator::apply(const Eigen::VectorXd& z) const {
    if (static_cast<std::size_t>(z.size()) != dim()) {
        throw ShapeError("operator of dimension " + std::to_string(dim()) + " applied to vector of length " +
                         std::to_string(z.size()));
    }
    if (dense_) return *dense_ * z;
    return (scale_ * right_.dot(z)) * left_;
}

Eigen::MatrixXd LatentOperator::to_dense() const {
    if (dense_) return *dense_;
    return scale_ * left_ * right_.transpose();
}

LatentOperator completeness_operator(const basis::QuasiEigenBasis& basis) {
    basis.ensure_valid();
    return LatentOperator::dense(basis.vectors().transpose() * basis.vectors(), basis.id());
}

namespace {

void check_index(const basis::QuasiEigenBasis& basis, std::size_t k) {
    if (k >= basis.dim()) {
        throw ConfigError("basis index " + std::to_string(k) + " out of range (M = " + std::to_string(basis.dim()) + ")");
    }
}

}  // namespace

LatentOperator projector(const basis::QuasiEigenBasis& basis, std::size_t from, std::size_t to) {
    basis.ensure_valid();
    check_index(basis, from);
    check_index(basis, to);
    return LatentOperator::rank_one(basis.vector(to), basis.vector(from), 1.0 / basis.norm_constant(), basis.id());
}

LatentOperator rotation(const basis::QuasiEigenBasis& basis, std::size_t a, std::size_t b, double theta,
                        double dtheta) {
    basis.ensure_valid();
    check_index(basis, a);
    check_index(basis, b);
    if (a == b) throw ConfigError("rotation plane needs two distinct basis vectors (got " + std::to_string(a) + " twice)");
    const Eigen::VectorXd xa = basis.vector(a);
    const Eigen::VectorXd xb = basis.vector(b);
    Eigen::VectorXd left = std::cos(theta + dtheta) * xa + std::sin(theta + dtheta) * xb;
    Eigen::VectorXd right = std::cos(theta) * xa + std::sin(theta) * xb;
    return LatentOperator::rank_one(std::move(left), std::move(right), 1.0 / basis.norm_constant(), basis.id());
}

Eigen::VectorXd renormalize(const Eigen::VectorXd& z, double target_norm2) {
    const double n2 = z.squaredNorm();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw DataError("cannot renormalize a zero (or non-finite) latent vector");
    return z / std::sqrt(n2 / target_norm2);
}

std::size_t Trajectory::endpoint(std::size_t target, const TrajectoryOptions& options) const {
    if (target <= options.first_label || target > options.last_label) {
        throw ConfigError("label " + std::to_string(target) + " is not a transition target");
    }
    return (target - options.first_label) * options.steps_per_transition;
}

Trajectory rotate_trajectory(const TensorF& start_latents, const models::Model& generator,
                             const basis::QuasiEigenBasis& basis, const TrajectoryOptions& options) {
    basis.ensure_valid();
    const std::size_t m = basis.dim();
    if (start_latents.rank() != 2 || start_latents.cols() != m) {
        throw ShapeError("trajectory start latents must be (rows, " + std::to_string(m) + "), got " +
                         shape_string(start_latents.shape()));
    }
    if (options.last_label <= options.first_label || options.last_label >= basis.labels()) {
        throw ConfigError("trajectory label range is empty or outside the basis labels");
    }
    if (options.steps_per_transition == 0) throw ConfigError("steps per transition must be >= 1");

    std::vector<LatentOperator> steps;
    for (std::size_t a = options.first_label; a < options.last_label; ++a) {
        const std::size_t from = basis.flat_index(a, options.set_index);
        const std::size_t to = basis.flat_index(a + 1, options.set_index);
        for (std::size_t r = 1; r <= options.steps_per_transition; ++r) {
            steps.push_back(rotation(basis, from, to, static_cast<double>(r - 1) * options.dtheta, options.dtheta));
        }
    }

    Trajectory t;
    t.rows = start_latents.rows();
    t.iterations = steps.size() + 1;
    t.latents.reserve(t.rows * t.iterations);
    const double target = static_cast<double>(m);
    for (std::size_t row = 0; row < t.rows; ++row) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(m));
        for (std::size_t c = 0; c < m; ++c) z(static_cast<Eigen::Index>(c)) = start_latents(row, c);
        t.latents.push_back(z);
        for (std::size_t s = 0; s < steps.size(); ++s) {
            z = steps[s].apply(z);
            if (options.renormalize) {
                try {
                    z = renormalize(z, target);
                } catch (const DataError&) {
                    throw DataError("rotation trajectory: latent of row " + std::to_string(row) +
                                    " annihilated at step " + std::to_string(s + 1));
                }
            }
            t.latents.push_back(z);
        }
    }

    TensorF all = TensorF::matrix(t.latents.size(), m);
    for (std::size_t i = 0; i < t.latents.size(); ++i) {
        for (std::size_t c = 0; c < m; ++c) all(i, c) = static_cast<float>(t.latents[i](static_cast<Eigen::Index>(c)));
    }
    t.images = models::generate(generator, all);
    return t;
}

Trajectory rotate_trajectory(const TensorF& images, const models::Model& encoder, const models::Model& generator,
                             const basis::QuasiEigenBasis& basis, SeededRng& rng, const TrajectoryOptions& options) {
    const auto enc = models::encode(encoder, images, rng);
    return rotate_trajectory(enc.z, generator, basis, options);
}

}  // namespace lsd::ops
