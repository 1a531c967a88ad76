#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "basis_fixtures.hpp"
#include "lsd/error.hpp"
#include "lsd/operators.hpp"
#include "lsd/spectral.hpp"

using namespace lsd;
using namespace lsd::ops;
using std::numbers::pi;

namespace {

std::vector<double> std_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

class OperatorTest : public ::testing::Test {
protected:
    basis::QuasiEigenBasis b = testkit::random_basis(10, 10, 31);
    SeededRng rng{32};

    Eigen::VectorXd random_z() {
        Eigen::VectorXd z(100);
        for (auto& v : z) v = rng.normal();
        return z;
    }
};

}  // namespace

TEST_F(OperatorTest, CompletenessIsScaledIdentity) {
    const Eigen::MatrixXd a = completeness_operator(b).to_dense();
    EXPECT_LE((a - 100.0 * Eigen::MatrixXd::Identity(100, 100)).cwiseAbs().maxCoeff() / 100.0, 1e-9);
    const Eigen::MatrixXd p = a / 100.0;
    EXPECT_LE((p * p - p).cwiseAbs().maxCoeff(), 1e-9);
}

TEST_F(OperatorTest, ProjectorMovesOneComponent) {
    const Eigen::VectorXd z = random_z();
    const auto c = spectral::decompose(std::vector<double>(z.data(), z.data() + 100), b).coefficients;
    const auto op = projector(b, 12, 40);
    EXPECT_TRUE(op.is_rank_one());
    EXPECT_LE((op.apply(z) - c[12] * b.vector(40)).norm(), 1e-10);
    EXPECT_LE((op.apply(b.vector(12)) - b.vector(40)).norm(), 1e-12);
    EXPECT_LE(op.apply(b.vector(13)).norm(), 1e-12);
    EXPECT_LE((projector(b, 5, 5).apply(b.vector(5)) - b.vector(5)).norm(), 1e-12);
    EXPECT_THROW(projector(b, 100, 0), ConfigError);
}

TEST_F(OperatorTest, ZeroRotationIsInPlaneProjector) {
    const auto r = rotation(b, 3, 8, 0.0, 0.0);
    EXPECT_LE((r.apply(b.vector(3)) - b.vector(3)).norm(), 1e-12);
    EXPECT_LE(r.apply(b.vector(8)).norm(), 1e-12);
}

TEST_F(OperatorTest, QuarterTurn) {
    EXPECT_LE((rotation(b, 3, 8, 0.0, pi / 2).apply(b.vector(3)) - b.vector(8)).norm() / 10.0, 1e-12);
}

TEST_F(OperatorTest, GeneralAngleMapsToShiftedCombination) {
    const double theta = 0.4, dtheta = 1.1;
    const Eigen::VectorXd in = std::cos(theta) * b.vector(1) + std::sin(theta) * b.vector(2);
    const Eigen::VectorXd out = std::cos(theta + dtheta) * b.vector(1) + std::sin(theta + dtheta) * b.vector(2);
    EXPECT_LE((rotation(b, 1, 2, theta, dtheta).apply(in) - out).norm(), 1e-11);
}

TEST_F(OperatorTest, AnnihilatesOutOfPlane) {
    for (std::size_t k : {0u, 4u, 50u, 99u}) EXPECT_LE(rotation(b, 1, 2, 0.3, 0.5).apply(b.vector(k)).norm(), 1e-11);
}

TEST_F(OperatorTest, RotationsCompose) {
    const Eigen::VectorXd x = b.vector(6);
    const Eigen::VectorXd two = rotation(b, 6, 7, 0.5, 0.7).apply(rotation(b, 6, 7, 0.0, 0.5).apply(x));
    const Eigen::VectorXd one = rotation(b, 6, 7, 0.0, 1.2).apply(x);
    EXPECT_LE((two - one).norm() / 10.0, 1e-12);
}

TEST_F(OperatorTest, RankOneMatchesDense) {
    const auto r = rotation(b, 6, 7, 0.2, 0.3);
    const Eigen::VectorXd z = random_z();
    const auto dense = LatentOperator::dense(r.to_dense(), b.id());
    EXPECT_LE((dense.apply(z) - r.apply(z)).norm(), 1e-10);
    EXPECT_EQ(r.dim(), 100u);
    EXPECT_THROW(rotation(b, 4, 4, 0.0, 0.1), ConfigError);
    EXPECT_THROW(r.apply(Eigen::VectorXd::Zero(5)), ShapeError);
}

TEST(Renormalize, TargetNorm) {
    const Eigen::Vector3d z(3, 0, 4);
    EXPECT_NEAR(renormalize(z, 3.0).squaredNorm(), 3.0, 1e-12);
    EXPECT_NEAR(renormalize(z, 3.0).normalized().dot(z.normalized()), 1.0, 1e-12);
    EXPECT_THROW(renormalize(Eigen::Vector3d::Zero(), 3.0), DataError);
    EXPECT_THROW(renormalize(Eigen::Vector3d(NAN, 0, 0), 3.0), DataError);
}

class TrajectoryTest : public ::testing::Test {
protected:
    void SetUp() override {
        SeededRng init(9);
        generator = models::Model::initialize(models::NetworkSpec::generator(10), init);
    }
    basis::QuasiEigenBasis b = testkit::random_basis(10, 1, 41);
    models::Model generator;
};

TEST_F(TrajectoryTest, ThreeSmallStepsEqualOneQuarterTurn) {
    TensorF start = TensorF::matrix(1, 10);
    for (std::size_t c = 0; c < 10; ++c) start(0, c) = static_cast<float>(b.vector(0)(static_cast<Eigen::Index>(c)));
    TrajectoryOptions small;
    small.last_label = 1;
    small.renormalize = false;
    const auto t3 = rotate_trajectory(start, generator, b, small);
    TrajectoryOptions big = small;
    big.steps_per_transition = 1;
    big.dtheta = pi / 2;
    const auto t1 = rotate_trajectory(start, generator, b, big);
    ASSERT_EQ(t3.iterations, 4u);
    ASSERT_EQ(t1.iterations, 2u);
    EXPECT_LE((t3.latent(0, 3) - t1.latent(0, 1)).norm() / 10.0, 1e-6);
    EXPECT_LE((t3.latent(0, 3) - b.vector(1)).norm() / 10.0, 1e-6);
}

TEST_F(TrajectoryTest, RenormalizedStepsKeepNormAndReachEachLabel) {
    SeededRng rng(5);
    const TensorF start = rng.normal_tensor<float>(2, 10);
    const TrajectoryOptions opts;
    const auto t = rotate_trajectory(start, generator, b, opts);
    ASSERT_EQ(t.iterations, 28u);
    ASSERT_EQ(t.images.rows(), 56u);
    for (std::size_t row = 0; row < 2; ++row) {
        for (std::size_t it = 1; it < t.iterations; ++it) EXPECT_NEAR(t.latent(row, it).squaredNorm(), 10.0, 1e-9);
        for (std::size_t target = 1; target <= 9; ++target) {
            const auto d = spectral::decompose(std_vector(t.latent(row, t.endpoint(target, opts))), b);
            EXPECT_EQ(b.key(d.rank_order.front()).label, target);
        }
    }
    EXPECT_EQ(t.endpoint(1, opts), 3u);
    EXPECT_EQ(t.endpoint(9, opts), 27u);
    EXPECT_THROW(t.endpoint(0, opts), ConfigError);
}

TEST_F(TrajectoryTest, AnnihilatedLatentNamesTheStep) {
    const TensorF start = TensorF::matrix(1, 10);
    try {
        rotate_trajectory(start, generator, b);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
    }
}
