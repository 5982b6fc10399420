#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "nsmc/datagen.hpp"
#include "nsmc/metrics.hpp"
#include "oracles.hpp"

using namespace nsmc;

TEST(Datagen, GroundTruthNormalizedAndDeterministic) {
    const GroundTruth a = gen_ground_truth(10, 10, 3, false, 7);
    const GroundTruth b = gen_ground_truth(10, 10, 3, false, 7);
    EXPECT_EQ(a.weights.u, b.weights.u);
    EXPECT_EQ(a.weights.v, b.weights.v);
    EXPECT_NEAR(singular_values(a.weights.u)(2), 1.0, 1e-8);
    EXPECT_NEAR(singular_values(a.weights.v)(2), 1.0, 1e-8);
    EXPECT_FALSE(a.known_first_row.has_value());
}

TEST(Datagen, GroundTruthHasFullRank) {
    const GroundTruth g = gen_ground_truth(50, 50, 3, true, 2);
    Eigen::JacobiSVD<Matrix> svd(g.weights.u);
    EXPECT_GT(svd.singularValues()(2), 0.5);
    EXPECT_EQ(svd.rank(), 3);
    ASSERT_TRUE(g.known_first_row.has_value());
    EXPECT_EQ(*g.known_first_row, Vector(g.weights.u.row(0).transpose()));
    EXPECT_THROW(gen_ground_truth(2, 5, 3, false, 1), std::invalid_argument);
}

TEST(Datagen, FeatureMomentsMatchStandardGaussian) {
    const FeaturePool pool = gen_features(10000, 10, 4, 3, 99);
    for (Eigen::Index j = 0; j < 4; ++j) {
        const double mean = pool.x.col(j).mean();
        const double var = (pool.x.col(j).array() - mean).square().mean();
        EXPECT_LT(std::abs(mean), 0.05) << j;
        EXPECT_GT(var, 0.9);
        EXPECT_LT(var, 1.1);
    }
    const FeaturePool again = gen_features(10000, 10, 4, 3, 99);
    EXPECT_EQ(pool.x, again.x);
    EXPECT_EQ(pool.z, again.z);
}

TEST(Datagen, MixtureExamples) {
    Matrix centers(3, 2);
    centers << 0, 0, 5, 5, -5, 5;
    const MixtureSample s = gen_mixture_features(50, centers, 0.0, 3);
    for (Eigen::Index i = 0; i < 50; ++i) {
        EXPECT_EQ(s.features.row(i), centers.row(s.labels[static_cast<std::size_t>(i)] - 1));
    }
    const MixtureSample one = gen_mixture_features(20, Matrix::Zero(1, 2), 1.0, 3);
    for (int l : one.labels) EXPECT_EQ(l, 1);
}

TEST(Datagen, SeparatedMixtureIsRecoveredByKmeans) {
    const int d = 3;
    const double spread = 0.2;
    Matrix centers(4, d);
    // pairwise distances 20 >= 10 * spread * sqrt(d)
    centers << 0, 0, 0, 20, 0, 0, 0, 20, 0, 0, 0, 20;
    const MixtureSample s = gen_mixture_features(400, centers, spread, 5);
    const KMeansResult km = kmeans(s.features, 4, 1);
    EXPECT_LT(clustering_error(km.labels, s.labels), 0.05);
}

TEST(Datagen, GaussianResponsesAtZeroTheta) {
    // Tanh with an all-zero pool gives Theta = 0 for every edge.
    const GroundTruth g = gen_ground_truth(3, 3, 2, false, 1);
    FeaturePool pool{Matrix::Zero(5, 3), Matrix::Zero(5, 3)};
    const EdgeSampleSet e =
        sample_edges(pool, g.weights, ActivationKind::Tanh, ActivationKind::Tanh, ResponseLaw::gaussian(1.0), 10000, 4);
    double mean = 0.0;
    for (const auto& s : e.entries) mean += s.y;
    mean /= 10000;
    EXPECT_LT(std::abs(mean), 0.05);
}

TEST(Datagen, BinomialResponsesAtZeroTheta) {
    const GroundTruth g = gen_ground_truth(3, 3, 2, false, 1);
    FeaturePool pool{Matrix::Zero(5, 3), Matrix::Zero(5, 3)};
    const EdgeSampleSet e =
        sample_edges(pool, g.weights, ActivationKind::Tanh, ActivationKind::Tanh, ResponseLaw::binomial(20), 10000, 4);
    double mean = 0.0, max_abs = 0.0;
    for (const auto& s : e.entries) {
        mean += s.y;
        max_abs = std::max(max_abs, std::abs(s.y));
        EXPECT_LE(s.y, 20.0);
        EXPECT_GE(s.y, 0.0);
    }
    mean /= 10000;
    EXPECT_GE(mean, 9.85);
    EXPECT_LE(mean, 10.15);
    EXPECT_EQ(e.beta, max_abs);
}

TEST(Datagen, MisspecifiedGaussianMoments) {
    const GroundTruth g = gen_ground_truth(3, 3, 2, false, 1);
    FeaturePool pool{Matrix::Zero(5, 3), Matrix::Zero(5, 3)};
    // Sigmoid on a zero pool: Theta = r / 4 = 0.5.
    const double tau = 0.4, s = (1 - tau) * (1 - tau);
    const EdgeSampleSet e = sample_edges(pool, g.weights, ActivationKind::Sigmoid, ActivationKind::Sigmoid,
                                         ResponseLaw::gaussian_misspec(tau), 20000, 9);
    double mean = 0.0, sq = 0.0;
    for (const auto& r : e.entries) mean += r.y;
    mean /= 20000;
    for (const auto& r : e.entries) sq += (r.y - mean) * (r.y - mean);
    const double var = sq / 20000;
    EXPECT_NEAR(mean, s * 0.5, 3 * std::sqrt(s / 20000) + 1e-3);
    EXPECT_NEAR(var, s, 0.03);
}

TEST(Datagen, PoissonOverflowIsReported) {
    WeightPair w(Matrix::Constant(1, 1, 10.0), Matrix::Constant(1, 1, 10.0));
    FeaturePool pool{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
    try {
        sample_edges(pool, w, ActivationKind::ReLU, ActivationKind::ReLU, ResponseLaw::poisson(), 1, 1);
        FAIL() << "expected ResponseOverflow";
    } catch (const ResponseOverflow& e) {
        EXPECT_DOUBLE_EQ(e.theta, 100.0);
        EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
    }
    // Binomial is bounded and never overflows.
    EXPECT_NO_THROW(
        sample_edges(pool, w, ActivationKind::ReLU, ActivationKind::ReLU, ResponseLaw::binomial(5), 10, 1));
}

TEST(Datagen, EdgeIndicesUniform) {
    const GroundTruth g = gen_ground_truth(2, 2, 1, false, 1);
    const FeaturePool pool = gen_features(10, 10, 2, 2, 1);
    const int m = 100000;
    const EdgeSampleSet e =
        sample_edges(pool, g.weights, ActivationKind::Tanh, ActivationKind::Tanh, ResponseLaw::gaussian(), m, 2);
    ASSERT_EQ(e.size(), static_cast<std::size_t>(m));
    std::vector<int> rows(10), cols(10);
    for (const auto& s : e.entries) {
        ASSERT_GE(s.row, 0);
        ASSERT_LT(s.row, 10);
        ASSERT_GE(s.col, 0);
        ASSERT_LT(s.col, 10);
        ++rows[static_cast<std::size_t>(s.row)];
        ++cols[static_cast<std::size_t>(s.col)];
    }
    const double expect = m / 10.0, sd = std::sqrt(m * 0.1 * 0.9);
    for (int i = 0; i < 10; ++i) {
        EXPECT_LT(std::abs(rows[static_cast<std::size_t>(i)] - expect), 3 * sd) << i;
        EXPECT_LT(std::abs(cols[static_cast<std::size_t>(i)] - expect), 3 * sd) << i;
    }
}

namespace {

GenerativeSpec small_spec(std::uint64_t seed) {
    GenerativeSpec spec;
    spec.weights = gen_ground_truth(4, 3, 2, false, seed).weights;
    spec.a1 = ActivationKind::Sigmoid;
    spec.a2 = ActivationKind::Tanh;
    spec.n1 = 50;
    spec.n2 = 40;
    spec.m = 3000;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST(Datagen, SplitSamplesSizesAndIndependentStreams) {
    const GenerativeSpec spec = small_spec(3);
    const SplitSample s = split_samples(spec);
    EXPECT_EQ(s.omega.size(), 3000u);
    EXPECT_EQ(s.omega_prime.size(), 3000u);
    EXPECT_NE(s.pool.x, s.pool_prime.x);

    // Omega alone, regenerated from its own streams, is identical.
    const FeaturePool pool = gen_features(spec.n1, spec.n2, 4, 3, derive_seed(spec.seed, Stream::Features));
    const EdgeSampleSet om = sample_edges(pool, spec.weights, spec.a1, spec.a2, spec.law, spec.m,
                                          derive_seed(spec.seed, Stream::Edges));
    EXPECT_EQ(pool.x, s.pool.x);
    ASSERT_EQ(om.size(), s.omega.size());
    for (std::size_t k = 0; k < om.size(); ++k) {
        EXPECT_EQ(om.entries[k].row, s.omega.entries[k].row);
        EXPECT_EQ(om.entries[k].y, s.omega.entries[k].y);
    }
}

TEST(Datagen, SplitSamplesShareLocation) {
    const SplitSample s = split_samples(small_spec(4));
    auto stats = [](const EdgeSampleSet& e) {
        double mean = 0.0, sq = 0.0;
        for (const auto& r : e.entries) mean += r.y;
        mean /= static_cast<double>(e.size());
        for (const auto& r : e.entries) sq += (r.y - mean) * (r.y - mean);
        return std::pair{mean, sq / static_cast<double>(e.size() - 1)};
    };
    const auto [m1, v1] = stats(s.omega);
    const auto [m2, v2] = stats(s.omega_prime);
    const double se = std::sqrt(v1 / s.omega.size() + v2 / s.omega_prime.size());
    EXPECT_LT(std::abs(m1 - m2), 3 * se);
}

TEST(Datagen, SharedPoolsAblation) {
    GenerativeSpec spec = small_spec(5);
    spec.share_pools = true;
    const SplitSample s = split_samples(spec);
    EXPECT_EQ(s.pool.x, s.pool_prime.x);
    EXPECT_EQ(s.pool.z, s.pool_prime.z);
}

TEST(Datagen, GatherAndConcat) {
    const SplitSample s = split_samples(small_spec(6));
    const SampleBatch a = s.batch();
    const SampleBatch b = s.batch_prime();
    ASSERT_EQ(a.size(), 3000);
    const auto& e = s.omega.entries[17];
    EXPECT_EQ(a.x.row(17), s.pool.x.row(e.row));
    EXPECT_EQ(a.z.row(17), s.pool.z.row(e.col));
    EXPECT_EQ(a.y(17), e.y);
    const SampleBatch u = concat(a, b);
    EXPECT_EQ(u.size(), 6000);
    EXPECT_EQ(u.x.row(3000 + 5), b.x.row(5));
    EXPECT_EQ(u.y(3000 + 5), b.y(5));
}

TEST(Datagen, SimilarityLabels) {
    const std::vector<int> labels{1, 1, 2};
    const std::vector<std::pair<int, int>> pairs{{0, 1}, {0, 2}, {2, 2}};
    const std::vector<double> y = gen_similarity_labels(labels, pairs);
    EXPECT_EQ(y, (std::vector<double>{1.0, 0.0, 1.0}));
    const std::vector<std::pair<int, int>> bad{{0, 3}};
    EXPECT_THROW(gen_similarity_labels(labels, bad), std::out_of_range);
}

TEST(Datagen, SeedDerivationIsStable) {
    EXPECT_EQ(derive_seed(1, Stream::Weights), derive_seed(1, Stream::Weights));
    EXPECT_NE(derive_seed(1, Stream::Weights), derive_seed(1, Stream::Features));
    EXPECT_NE(derive_seed(1, Stream::Weights), derive_seed(2, Stream::Weights));
}
