#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "basis_fixtures.hpp"
#include "lsd/basis.hpp"
#include "lsd/error.hpp"
#include "synthetic.hpp"

using namespace lsd;
using namespace lsd::basis;

namespace {

LatentSet make_set(std::vector<std::vector<float>> rows, SetKey key = {0, 1}) {
    const std::size_t m = rows.front().size();
    LatentSet s{key, SetSource::sampled, TensorF::matrix(rows.size(), m)};
    for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), s.vectors.row(r).begin());
    return s;
}

/// Classifier whose output is `label` for every input.
models::Model constant_classifier(std::size_t label) {
    SeededRng rng(1);
    auto c = models::Model::initialize(models::NetworkSpec::classifier(), rng);
    for (auto* p : c.net.parameters()) p->fill(0.0f);
    c.net.layers().back().bias[label] = 10.0f;
    return c;
}

}  // namespace

TEST(ProcessingOrder, SetMajorLabelMinor) {
    const auto order = processing_order(3, 2);
    const std::vector<SetKey> expected{{0, 1}, {1, 1}, {2, 1}, {0, 2}, {1, 2}, {2, 2}};
    EXPECT_EQ(order, expected);
}

TEST(AverageSet, SingletonIsItself) {
    const auto m = average_set(make_set({{1.5f, -2.0f, 3.25f}}));
    EXPECT_EQ(m.values, (std::vector<double>{1.5, -2.0, 3.25}));
}

TEST(AverageSet, OppositeVectorsCancel) {
    const auto m = average_set(make_set({{1.5f, -2.0f}, {-1.5f, 2.0f}}));
    EXPECT_EQ(m.values, (std::vector<double>{0.0, 0.0}));
}

TEST(AverageSet, EmptySetRejected) {
    LatentSet empty{{4, 2}, SetSource::sampled, {}};
    EXPECT_THROW(average_set(empty), DataError);
}

TEST(Convergence, ConstantSetHasZeroSpread) {
    const auto set = make_set({{2, 3}, {2, 3}, {2, 3}, {2, 3}});
    for (const auto& row : convergence_check(set, std::vector<std::size_t>{1, 2, 4})) {
        for (double s : row.stddev) EXPECT_EQ(s, 0.0);
        EXPECT_EQ(row.mean, (std::vector<double>{2.0, 3.0}));
    }
}

TEST(Convergence, FullPrefixEqualsPlainStatistics) {
    const auto set = make_set({{1, 0}, {2, 4}, {6, 2}});
    const auto rows = convergence_check(set, std::vector<std::size_t>{3});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].mean, average_set(set).values);
    // Sample standard deviation (n - 1) of {1, 2, 6} and {0, 4, 2}.
    EXPECT_NEAR(rows[0].stddev[0], std::sqrt(7.0), 1e-12);
    EXPECT_NEAR(rows[0].stddev[1], 2.0, 1e-12);
}

TEST(Convergence, SemShrinksLikeInverseRootV) {
    SeededRng rng(17);
    LatentSet set{{0, 1}, SetSource::sampled, rng.normal_tensor<float>(4000, 100)};
    const auto rows = convergence_check(set, std::vector<std::size_t>{1000, 4000});
    EXPECT_NEAR(rows[0].mean_sem / rows[1].mean_sem, 2.0, 0.5);
}

TEST(Convergence, PrefixOutOfRange) {
    const auto set = make_set({{1}, {2}});
    EXPECT_THROW(convergence_check(set, std::vector<std::size_t>{3}), ConfigError);
    EXPECT_THROW(convergence_check(set, std::vector<std::size_t>{0}), ConfigError);
}

TEST(GramSchmidt, OrthogonalInputsAreOnlyRescaled) {
    std::vector<MeanVector> means{{{0, 1}, {2, 0, 0}}, {{1, 1}, {0, 0, -0.5}}, {{2, 1}, {0, 7, 0}}};
    const auto b = gram_schmidt(means, 3.0);
    const double s = std::sqrt(3.0);
    EXPECT_NEAR((b.vector(0) - Eigen::Vector3d(s, 0, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((b.vector(1) - Eigen::Vector3d(0, 0, -s)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((b.vector(2) - Eigen::Vector3d(0, s, 0)).norm(), 0.0, 1e-15);
}

TEST(GramSchmidt, MatchesHouseholderQrSpans) {
    SeededRng rng(21);
    const auto means = testkit::random_means(2, 2, rng);  // M = 4
    const auto b = gram_schmidt(means, 4.0);
    const Eigen::MatrixXd a = stack_means(means).transpose();  // columns = inputs
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    // Nested spans: xi_0..xi_k span the same space as the first k+1 QR columns.
    for (Eigen::Index k = 0; k < 4; ++k) {
        const Eigen::MatrixXd qk = q.leftCols(k + 1);
        const Eigen::VectorXd xi = b.vector(static_cast<std::size_t>(k)) / 2.0;
        EXPECT_LE((xi - qk * (qk.transpose() * xi)).norm(), 1e-10);
        const Eigen::VectorXd qcol = q.col(k);
        Eigen::MatrixXd xs(4, k + 1);
        for (Eigen::Index j = 0; j <= k; ++j) xs.col(j) = b.vector(static_cast<std::size_t>(j)) / 2.0;
        EXPECT_LE((qcol - xs * (xs.transpose() * qcol)).norm(), 1e-10);
    }
}

TEST(GramSchmidt, OrthogonalityAndNorm) {
    const auto b = testkit::random_basis(10, 10, 5);
    const Eigen::MatrixXd g = gram_matrix(b.vectors());
    EXPECT_LE((g - 100.0 * Eigen::MatrixXd::Identity(100, 100)).cwiseAbs().maxCoeff() / 100.0, 1e-9);
    for (Eigen::Index k = 0; k < 100; ++k) EXPECT_NEAR(g(k, k), 100.0, 100.0 * 1e-12);
    EXPECT_LE(b.orthogonality_error(), 1e-9);
}

TEST(GramSchmidt, RankDeficiencyNamesTheOffendingSet) {
    std::vector<MeanVector> means{{{0, 1}, {1, 0, 0}}, {{1, 1}, {0, 1, 0}}, {{2, 1}, {3, -2, 0}}};
    try {
        gram_schmidt(means, 3.0);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("(label 2, set 1)"), std::string::npos) << e.what();
    }
}

TEST(GramSchmidt, WrongShape) {
    std::vector<MeanVector> means{{{0, 1}, {1, 0}}, {{1, 1}, {0, 1, 0}}};
    EXPECT_THROW(gram_schmidt(means, 2.0), ShapeError);
}

TEST(GramMatrix, SingleVector) {
    Eigen::MatrixXd v(1, 3);
    v << 1, 2, 2;
    EXPECT_EQ(gram_matrix(v), Eigen::MatrixXd::Constant(1, 1, 9.0));
}

TEST(GramMatrix, MeansAreNotOrthogonal) {
    SeededRng rng(3);
    auto means = testkit::random_means(2, 2, rng);
    for (auto& m : means) {
        for (auto& v : m.values) v += 1.0;  // common offset, like label means
    }
    const Eigen::MatrixXd g = gram_matrix(stack_means(means));
    double off = 0.0;
    for (Eigen::Index a = 0; a < 4; ++a) {
        for (Eigen::Index b = 0; b < 4; ++b) {
            if (a != b) off = std::max(off, std::abs(g(a, b)));
        }
    }
    EXPECT_GT(off, 0.1);
}

TEST(Basis, StaleBasisRejected) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2) * std::sqrt(2.0);
    v(1, 0) = 0.1;
    const QuasiEigenBasis b(2, 1, 2.0, v, {{0, 1}, {1, 1}});
    EXPECT_THROW(b.ensure_valid(), DataError);
}

TEST(Basis, FlatIndexLookup) {
    const auto b = testkit::random_basis(10, 10, 2);
    EXPECT_EQ(b.flat_index(7, 1), 7u);
    EXPECT_EQ(b.flat_index(3, 2), 13u);
    EXPECT_EQ(b.key(13), (SetKey{3, 2}));
    EXPECT_THROW(b.flat_index(10, 1), ConfigError);
}

TEST(Lsdb, RoundTripAndGuards) {
    const auto b = testkit::random_basis(10, 2, 9);
    const auto bytes = serialize_basis(b);
    EXPECT_EQ(bytes.size(), 4 + 4 * 4 + 8 + 20 * 8 + 20 * 20 * 8u);
    const auto back = deserialize_basis(bytes);
    EXPECT_TRUE(back == b);
    EXPECT_EQ(back.id(), b.id());

    auto bad = bytes;
    bad[1] = 'X';
    EXPECT_THROW(deserialize_basis(bad), FormatError);
    auto cut = bytes;
    cut.resize(cut.size() - 8);
    EXPECT_THROW(deserialize_basis(cut), FormatError);
}

TEST(Histograms, BinsAndNormalization) {
    SeededRng rng(4);
    std::vector<LatentSet> sets;
    for (std::size_t a = 0; a < 2; ++a) {
        LatentSet s{{a, 2}, SetSource::sampled, rng.normal_tensor<float>(2000, 10)};
        sets.push_back(std::move(s));
    }
    sets[1].vectors[0] = 50.0f;  // out of range, lands in the last bin
    const auto h = label_pdf_histograms(sets, 2);
    ASSERT_EQ(h.size(), 2u);
    ASSERT_EQ(h[0].centers.size(), kHistogramBins);
    EXPECT_NEAR(h[0].centers.front(), -6.0, 1e-12);
    EXPECT_NEAR(h[0].centers[60], 0.0, 1e-12);
    EXPECT_NEAR(h[0].centers.back(), 6.0, 1e-12);
    for (const auto& hist : h) {
        double mass = 0.0;
        for (double d : hist.density) mass += d * 0.1;
        EXPECT_NEAR(mass, 1.0, 1e-9);
        EXPECT_EQ(hist.samples, 20000u);
    }
    EXPECT_GT(h[1].density.back(), 0.0);
    // Sampled N(0, 1) coordinates follow the reference density near the mode.
    EXPECT_NEAR(h[0].density[60], h[0].normal_pdf[60], 0.05);
    EXPECT_NEAR(h[0].normal_pdf[60], 1.0 / std::sqrt(2.0 * 3.141592653589793), 1e-12);
}

class SetCollection : public ::testing::Test {
protected:
    void SetUp() override {
        std::vector<std::uint8_t> labels;
        const auto idx = testkit::synthetic_images(10, 3, labels);
        images = TensorF::matrix(idx.count, 784);
        for (std::size_t i = 0; i < idx.pixels.size(); ++i) images[i] = data::normalize_pixel(idx.pixels[i]);
        image_labels.assign(labels.begin(), labels.end());
        SeededRng rng(5);
        encoder = models::Model::initialize(models::NetworkSpec::encoder(10), rng);
        generator = models::Model::initialize(models::NetworkSpec::generator(10), rng);
    }

    TensorF images;
    std::vector<std::size_t> image_labels;
    models::Model encoder, generator;
};

TEST_F(SetCollection, EncodedSetExhaustionNamesLabelAndCount) {
    SeededRng rng(1);
    try {
        collect_encoded_set(images, image_labels, encoder, generator, constant_classifier(3), 3, 200, rng);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("label 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("only 10 of 200"), std::string::npos) << msg;
    }
}

TEST_F(SetCollection, EncodedSetKeepsOnlyRoundTripMatches) {
    SeededRng rng(1);
    const auto set = collect_encoded_set(images, image_labels, encoder, generator, constant_classifier(4), 4, 10, rng);
    EXPECT_EQ(set.size(), 10u);
    EXPECT_EQ(set.source, SetSource::encoded);
    EXPECT_EQ(set.key, (SetKey{4, 1}));
    SeededRng other(1);
    EXPECT_THROW(collect_encoded_set(images, image_labels, encoder, generator, constant_classifier(5), 4, 1, other),
                 DataError);
}

TEST_F(SetCollection, SampledSetAcceptsExactlyV) {
    SeededRng rng(2);
    const auto c = constant_classifier(6);
    const auto set = collect_sampled_set(generator, c, 6, 3, 300, rng);
    EXPECT_EQ(set.size(), 300u);
    EXPECT_EQ(set.key, (SetKey{6, 3}));
    const auto labels = models::classify(c, models::generate(generator, set.vectors)).labels;
    for (auto l : labels) EXPECT_EQ(l, 6u);
}

TEST_F(SetCollection, SampledSetAbortsForDegenerateLabel) {
    SeededRng rng(2);
    SampledSetOptions opts;
    opts.window = 1024;
    try {
        collect_sampled_set(generator, constant_classifier(0), 7, 2, 5, rng, opts);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("label 7"), std::string::npos) << e.what();
    }
}

TEST_F(SetCollection, SampledSetsFollowTheGenerator) {
    // With a real (untrained) classifier every accepted z still decodes to its label.
    SeededRng rng(3), init(4);
    const auto c = models::Model::initialize(models::NetworkSpec::classifier(), init);
    const auto probe = models::classify(c, models::generate(generator, rng.normal_tensor<float>(256, 10))).labels;
    const std::size_t label = probe[0];
    const auto set = collect_sampled_set(generator, c, label, 2, 20, rng);
    for (auto l : models::classify(c, models::generate(generator, set.vectors)).labels) EXPECT_EQ(l, label);
}
