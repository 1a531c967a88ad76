#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "lsd/basis.hpp"
#include "lsd/models.hpp"

namespace lsd::ops {

/// Linear map on latent space, held either densely or as scale * left * right^T.
class LatentOperator {
public:
    static LatentOperator dense(Eigen::MatrixXd matrix, std::uint64_t basis_id);
    static LatentOperator rank_one(Eigen::VectorXd left, Eigen::VectorXd right, double scale, std::uint64_t basis_id);

    bool is_rank_one() const { return !dense_.has_value(); }
    std::uint64_t basis_id() const { return basis_id_; }
    std::size_t dim() const;

    Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
    Eigen::MatrixXd to_dense() const;

private:
    LatentOperator() = default;

    std::optional<Eigen::MatrixXd> dense_;
    Eigen::VectorXd left_;
    Eigen::VectorXd right_;
    double scale_ = 1.0;
    std::uint64_t basis_id_ = 0;
};

/// A = sum_k |xi_k><xi_k|, equal to C times the identity for a spanning basis.
LatentOperator completeness_operator(const basis::QuasiEigenBasis& basis);

/// B = |xi_to><xi_from| / C, so B z = c_from xi_to.
LatentOperator projector(const basis::QuasiEigenBasis& basis, std::size_t from, std::size_t to);

/// R(dtheta, theta) = (cos(theta + dtheta) xi_a + sin(theta + dtheta) xi_b)
///                    (cos(theta) <xi_a| + sin(theta) <xi_b|) / C.
/// Maps cos(theta) xi_a + sin(theta) xi_b to the same combination at
/// theta + dtheta and annihilates every component outside the (a, b) plane.
LatentOperator rotation(const basis::QuasiEigenBasis& basis, std::size_t a, std::size_t b, double theta, double dtheta);

/// z / sqrt(<z|z> / target_norm2). Throws DataError on a zero vector.
Eigen::VectorXd renormalize(const Eigen::VectorXd& z, double target_norm2);

struct TrajectoryOptions {
    std::size_t steps_per_transition = 3;
    double dtheta = std::numbers::pi / 6.0;
    /// Transitions run first_label -> first_label + 1 -> ... -> last_label.
    std::size_t first_label = 0;
    std::size_t last_label = 9;
    std::size_t set_index = 1;
    bool renormalize = true;
};

struct Trajectory {
    std::size_t rows = 0;
    /// Iteration 0 is the starting latent; iteration t >= 1 follows t rotation steps.
    std::size_t iterations = 0;
    std::vector<Eigen::VectorXd> latents;  // rows * iterations, row-major
    TensorF images;                        // (rows * iterations, d), same order

    const Eigen::VectorXd& latent(std::size_t row, std::size_t iteration) const {
        return latents[row * iterations + iteration];
    }
    /// Iteration index at which the transition into `target` completes.
    std::size_t endpoint(std::size_t target, const TrajectoryOptions& options) const;
};

/// Applies the sequence of in-plane rotations (xi_{a,i}, xi_{a+1,i}),
/// steps_per_transition steps each with theta = (r - 1) * dtheta,
/// renormalizing to squared norm M after every step and decoding each
/// iterate through the generator. Throws DataError naming the step when a
/// rotation annihilates the latent.
Trajectory rotate_trajectory(const TensorF& start_latents, const models::Model& generator,
                             const basis::QuasiEigenBasis& basis, const TrajectoryOptions& options = {});

/// Encodes `images` with the encoder first, then runs rotate_trajectory.
Trajectory rotate_trajectory(const TensorF& images, const models::Model& encoder, const models::Model& generator,
                             const basis::QuasiEigenBasis& basis, SeededRng& rng, const TrajectoryOptions& options = {});

}  // namespace lsd::ops
