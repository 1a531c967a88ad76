#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "basis_fixtures.hpp"
#include "lsd/error.hpp"
#include "lsd/spectral.hpp"

using namespace lsd;
using namespace lsd::spectral;

namespace {

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd as_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

class SpectralTest : public ::testing::Test {
protected:
    basis::QuasiEigenBasis b = testkit::random_basis(10, 10, 11);
    SeededRng rng{12};

    Eigen::VectorXd random_z() {
        Eigen::VectorXd z(100);
        for (auto& v : z) v = rng.normal();
        return z;
    }
};

}  // namespace

TEST_F(SpectralTest, BasisVectorHasOneUnitCoefficient) {
    const auto d = decompose(as_vector(b.vector(37)), b);
    for (std::size_t k = 0; k < 100; ++k) EXPECT_NEAR(d.coefficients[k], k == 37 ? 1.0 : 0.0, 1e-12);
    EXPECT_EQ(d.rank_order.front(), 37u);
}

TEST_F(SpectralTest, Linearity) {
    const Eigen::VectorXd z1 = random_z(), z2 = random_z();
    const auto d1 = decompose(as_vector(z1), b), d2 = decompose(as_vector(z2), b);
    const auto d = decompose(as_vector(2.5 * z1 - 0.75 * z2), b);
    for (std::size_t k = 0; k < 100; ++k) {
        EXPECT_NEAR(d.coefficients[k], 2.5 * d1.coefficients[k] - 0.75 * d2.coefficients[k], 1e-12);
    }
}

TEST_F(SpectralTest, CoefficientsSolveTheLinearSystem) {
    // Independent route: z = sum_k c_k xi_k solved by LU on the basis matrix.
    const Eigen::VectorXd z = random_z();
    const Eigen::VectorXd c = b.vectors().transpose().partialPivLu().solve(z);
    const auto d = decompose(as_vector(z), b);
    for (std::size_t k = 0; k < 100; ++k) EXPECT_NEAR(d.coefficients[k], c(static_cast<Eigen::Index>(k)), 1e-10);
}

TEST_F(SpectralTest, RankOrderIsByAmplitudeWithLowIndexTies) {
    Eigen::VectorXd z = b.vector(4) * -3.0 + b.vector(9) * 2.0 + b.vector(2) * 2.0;
    const auto d = decompose(as_vector(z), b);
    EXPECT_EQ(d.rank_order[0], 4u);
    EXPECT_EQ(d.rank_order[1], 2u);
    EXPECT_EQ(d.rank_order[2], 9u);
}

TEST_F(SpectralTest, FullReconstructionIsIdentity) {
    const Eigen::VectorXd z = random_z();
    const auto zr = as_eigen(reconstruct(decompose(as_vector(z), b), b, 100));
    EXPECT_LE((zr - z).norm() / z.norm(), 1e-12);
}

TEST_F(SpectralTest, SingleTermReconstruction) {
    const Eigen::VectorXd z = random_z();
    const auto d = decompose(as_vector(z), b);
    const std::size_t top = d.rank_order.front();
    const auto zr = as_eigen(reconstruct(d, b, 1));
    EXPECT_LE((zr - d.coefficients[top] * b.vector(top)).norm(), 1e-12);
    EXPECT_THROW(reconstruct(d, b, 0), ConfigError);
    EXPECT_THROW(reconstruct(d, b, 101), ConfigError);
}

TEST_F(SpectralTest, ParsevalIdentity) {
    const Eigen::VectorXd z = random_z();
    const auto d = decompose(as_vector(z), b);
    double s = 0.0;
    for (double c : d.coefficients) s += c * c;
    EXPECT_NEAR(100.0 * s, z.squaredNorm(), 1e-10 * z.squaredNorm());
}

TEST_F(SpectralTest, ReconstructionAgainstForeignBasisRejected) {
    const auto other = testkit::random_basis(10, 10, 99);
    const auto d = decompose(as_vector(random_z()), b);
    EXPECT_THROW(reconstruct(d, other, 3), DataError);
}

TEST_F(SpectralTest, ClassifiesByDominantVector) {
    const Eigen::VectorXf z = b.vector(b.flat_index(7, 1)).cast<float>();
    const auto lsd = classify_lsd(std::span<const float>(z.data(), 100), b);
    EXPECT_EQ(lsd.label, 7u);
    EXPECT_EQ(lsd.key, (basis::SetKey{7, 1}));
}

TEST_F(SpectralTest, LabelIsScaleInvariant) {
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXf z = random_z().cast<float>();
        const std::size_t base = classify_lsd(std::span<const float>(z.data(), 100), b).label;
        for (float s : {0.1f, 3.0f, 1000.0f}) {
            const Eigen::VectorXf zs = z * s;
            EXPECT_EQ(classify_lsd(std::span<const float>(zs.data(), 100), b).label, base);
        }
    }
}

TEST_F(SpectralTest, WrongLengthRejected) {
    std::vector<double> z(99, 1.0);
    EXPECT_THROW(decompose(z, b), ShapeError);
}

TEST_F(SpectralTest, RankOfTruth) {
    const Eigen::VectorXd z = 5.0 * b.vector(b.flat_index(2, 4)) + 1.0 * b.vector(b.flat_index(6, 1));
    const auto d = decompose(as_vector(z), b);
    EXPECT_EQ(rank_of_truth(d, 2, b), 1u);
    EXPECT_EQ(rank_of_truth(d, 6, b), 2u);
    EXPECT_THROW(rank_of_truth(d, 10, b), ConfigError);
}

TEST(RankOfTruth, CanBeLast) {
    // M = 10, one set per label: label 9 vector absent from z ranks last.
    const auto b = testkit::random_basis(10, 1, 3);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(10);
    for (std::size_t k = 0; k < 9; ++k) z += static_cast<double>(k + 1) * b.vector(k);
    EXPECT_EQ(rank_of_truth(decompose(std::vector<double>(z.data(), z.data() + 10), b), 9, b), 10u);
}

TEST(CumulativeCurve, MonotoneAndEndsAtOne) {
    const std::vector<std::size_t> ranks{1, 1, 2, 4, 1, 3, 10, 2};
    const auto c = cumulative_curve(ranks, 10);
    ASSERT_EQ(c.size(), 10u);
    EXPECT_DOUBLE_EQ(c[0], 3.0 / 8.0);
    EXPECT_DOUBLE_EQ(c[1], 5.0 / 8.0);
    EXPECT_DOUBLE_EQ(c[3], 7.0 / 8.0);
    EXPECT_DOUBLE_EQ(c[9], 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GE(c[i], c[i - 1]);
    EXPECT_THROW(cumulative_curve(std::vector<std::size_t>{0}, 10), ConfigError);
    EXPECT_THROW(cumulative_curve(std::vector<std::size_t>{11}, 10), ConfigError);
}

TEST(AmplitudeProfiles, GroupsByTruthRank) {
    LsdEvaluation ev;
    ev.truth_rank = {1, 2, 5, 1};
    ev.normalized_amplitudes = {{1.0, 0.5, 0.2, 0.1}, {1.0, 0.9, 0.3, 0.0}, {1.0, 0.1, 0.1, 0.1}, {1.0, 0.51, 0.2, 0.1}};
    const auto p = amplitude_rank_profiles(ev);
    EXPECT_EQ(p.group_sizes, (std::vector<std::size_t>{2, 1, 0}));
    EXPECT_EQ(p.rows.size(), 12u);
    EXPECT_EQ(p.pdfs.size(), 3 * 3 * kProfileBins);
    for (std::size_t g = 0; g < 2; ++g) {
        double mass = 0.0;
        for (const auto& r : p.pdfs) {
            if (r.truth_rank == g + 1 && r.amplitude_rank == 2) mass += r.density / kProfileBins;
        }
        EXPECT_NEAR(mass, 1.0, 1e-12);
    }
}

class SpectralModels : public ::testing::Test {
protected:
    void SetUp() override {
        SeededRng init(8);
        encoder = models::Model::initialize(models::NetworkSpec::encoder(10), init);
        generator = models::Model::initialize(models::NetworkSpec::generator(10), init);
        classifier = models::Model::initialize(models::NetworkSpec::classifier(), init);
        images = init.normal_tensor<float>(12, 784);
        for (auto& v : images.storage()) v = std::tanh(v);
        for (std::size_t i = 0; i < 12; ++i) labels.push_back(i % 10);
    }

    basis::QuasiEigenBasis b = testkit::random_basis(10, 1, 6);
    models::Model encoder, generator, classifier;
    TensorF images;
    std::vector<std::size_t> labels;
};

TEST_F(SpectralModels, DenoiseStripLayout) {
    SeededRng rng(1);
    const TensorF out = denoise(images.slice_rows(0, 3), encoder, generator, b, rng, {{1, 2, 3, 4, 10}, false});
    ASSERT_EQ(out.rows(), 3u * 7u);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t c = 0; c < 784; ++c) ASSERT_EQ(out(i * 7, c), images(i, c));
    }
    // Keeping all M components decodes the same image as the full expansion.
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t c = 0; c < 784; ++c) EXPECT_NEAR(out(i * 7 + 6, c), out(i * 7 + 1, c), 1e-5);
    }
}

TEST_F(SpectralModels, FullExpansionMatchesDirectDecode) {
    SeededRng r1(2), r2(2);
    const TensorF strips = denoise(images, encoder, generator, b, r1, {{10}, false});
    const auto enc = models::encode(encoder, images, r2);
    const TensorF direct = models::generate(generator, enc.z);
    double worst = 0.0;
    for (std::size_t i = 0; i < images.rows(); ++i) {
        for (std::size_t c = 0; c < 784; ++c) worst = std::max(worst, double(std::abs(strips(i * 3 + 1, c) - direct(i, c))));
    }
    EXPECT_LE(worst, 1e-5);
}

TEST_F(SpectralModels, DenoiseRejectsBadKeep) {
    SeededRng rng(1);
    EXPECT_THROW(denoise(images, encoder, generator, b, rng, {{0}, false}), ConfigError);
    EXPECT_THROW(denoise(images, encoder, generator, b, rng, {{11}, false}), ConfigError);
}

TEST_F(SpectralModels, EncodingStreamsArePerImage) {
    const TensorF all = encode_dataset(encoder, images, 42, 3);
    const TensorF tail = encode_dataset(encoder, images.slice_rows(0, 5), 42, 3);
    // Same noise per image; GEMM blocking differs with batch height.
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t c = 0; c < 10; ++c) EXPECT_NEAR(all(i, c), tail(i, c), 1e-5);
    }
    const TensorF other = encode_dataset(encoder, images, 42, 4);
    EXPECT_NE(all(0, 0), other(0, 0));
}

TEST_F(SpectralModels, EnsembleClassifierBaselineIsConstant) {
    const auto r = ensemble_accuracy(images, labels, 4, encoder, generator, classifier, b, 42);
    ASSERT_EQ(r.trials.size(), 4u);
    for (const auto& t : r.trials) EXPECT_EQ(t.classifier, r.trials[0].classifier);
    EXPECT_EQ(r.stddev.classifier, 0.0);
    EXPECT_EQ(r.first_trial.predicted.size(), 12u);
    const auto again = ensemble_accuracy(images, labels, 4, encoder, generator, classifier, b, 42);
    for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(again.trials[t].lsd, r.trials[t].lsd);
}
