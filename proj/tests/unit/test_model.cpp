#include <random>

#include <gtest/gtest.h>

#include "nsmc/model.hpp"
#include "oracles.hpp"

using namespace nsmc;

TEST(Model, EmbedExamples) {
    Matrix u(1, 1);
    u << 2.0;
    EXPECT_DOUBLE_EQ(embed(u, ActivationKind::ReLU, Vector::Constant(1, 3.0))(0), 6.0);

    std::mt19937_64 rng(5);
    const Matrix w = oracle::gaussian(4, 3, rng);
    const Vector e = embed(w, ActivationKind::Sigmoid, Vector::Zero(4));
    for (Eigen::Index p = 0; p < 3; ++p) EXPECT_EQ(e(p), 0.5);

    Vector x(2);
    x << 1.0, -1.0;
    const Vector t = embed(Matrix::Identity(2, 2), ActivationKind::Tanh, x);
    EXPECT_DOUBLE_EQ(t(0), std::tanh(1.0));
    EXPECT_DOUBLE_EQ(t(1), -std::tanh(1.0));
}

TEST(Model, ThetaExamples) {
    WeightPair w(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0));
    EXPECT_DOUBLE_EQ(theta(w, ActivationKind::ReLU, ActivationKind::ReLU, Vector::Constant(1, 2.0),
                           Vector::Constant(1, 3.0)),
                     6.0);

    std::mt19937_64 rng(11);
    const WeightPair r3 = oracle::random_weights(5, 4, 3, rng);
    EXPECT_EQ(theta(r3, ActivationKind::Sigmoid, ActivationKind::Sigmoid, Vector::Zero(5), Vector::Zero(4)), 0.75);
}

TEST(Model, ThetaMatchesScalarLoop) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const WeightPair w = oracle::random_weights(4, 5, 2, rng);
        const Vector x = oracle::gaussian(4, 1, rng);
        const Vector z = oracle::gaussian(5, 1, rng);
        EXPECT_NEAR(theta(w, ActivationKind::Tanh, ActivationKind::ReLU, x, z),
                    oracle::theta(w, ActivationKind::Tanh, ActivationKind::ReLU, x, z), 1e-14);
    }
}

TEST(Model, ReluThetaIsPositivelyHomogeneous) {
    std::mt19937_64 rng(8);
    const WeightPair w = oracle::random_weights(6, 6, 3, rng);
    const Vector x = oracle::gaussian(6, 1, rng);
    const Vector z = oracle::gaussian(6, 1, rng);
    const double base = theta(w, ActivationKind::ReLU, ActivationKind::ReLU, x, z);
    for (double c : {0.5, 2.0, 7.0}) {
        EXPECT_NEAR(theta(w, ActivationKind::ReLU, ActivationKind::ReLU, c * x, c * z), c * c * base,
                    1e-12 * (1 + std::abs(c * c * base)));
    }
}

TEST(Model, EmbedRowsMatchesEmbed) {
    std::mt19937_64 rng(4);
    const Matrix w = oracle::gaussian(5, 2, rng);
    const Matrix f = oracle::gaussian(7, 5, rng);
    const Matrix e = embed_rows(w, ActivationKind::Tanh, f);
    for (Eigen::Index i = 0; i < 7; ++i) {
        EXPECT_LT((e.row(i).transpose() - embed(w, ActivationKind::Tanh, f.row(i).transpose())).norm(), 1e-14);
    }
}

TEST(Model, ShapeMismatchThrows) {
    EXPECT_THROW(embed(Matrix::Zero(3, 2), ActivationKind::ReLU, Vector::Zero(4)), std::invalid_argument);
    WeightPair w(Matrix::Zero(3, 2), Matrix::Zero(2, 2));
    EXPECT_THROW(theta(w, ActivationKind::ReLU, ActivationKind::ReLU, Vector::Zero(3), Vector::Zero(3)),
                 std::invalid_argument);
}

TEST(Model, NormalizeGroundTruthExamples) {
    // singular values (2, 0.5) -> (4, 1)
    Matrix w = Matrix::Zero(3, 2);
    w(0, 0) = 2.0;
    w(1, 1) = 0.5;
    const Vector s = singular_values(normalize_ground_truth(w));
    EXPECT_NEAR(s(0), 4.0, 1e-12);
    EXPECT_NEAR(s(1), 1.0, 1e-12);

    std::mt19937_64 rng(1);
    const Matrix g = oracle::gaussian(10, 3, rng);
    const Matrix n = normalize_ground_truth(g);
    Eigen::JacobiSVD<Matrix> svd(n);
    EXPECT_NEAR(svd.singularValues()(2), 1.0, 1e-8);
    EXPECT_LT((normalize_ground_truth(n) - n).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Model, NormalizeRejectsRankDeficient) {
    Matrix w = Matrix::Zero(4, 2);
    w(0, 0) = 1.0;
    w(1, 0) = 2.0;
    EXPECT_THROW(normalize_ground_truth(w), std::invalid_argument);
}

TEST(Model, FlattenRoundTripAndArithmetic) {
    std::mt19937_64 rng(2);
    const WeightPair w = oracle::random_weights(4, 3, 2, rng);
    const Vector f = w.flatten();
    EXPECT_EQ(f.size(), 14);
    EXPECT_EQ(f(0), w.u(0, 0));
    EXPECT_EQ(f(4), w.u(0, 1));
    EXPECT_EQ(f(8), w.v(0, 0));
    const WeightPair back = WeightPair::unflatten(f, 4, 3, 2);
    EXPECT_EQ(back.u, w.u);
    EXPECT_EQ(back.v, w.v);
    EXPECT_NEAR(squared_distance(w, 2.0 * w), w.squared_norm(), 1e-12);
    EXPECT_EQ(squared_distance(w - w, WeightPair::zeros_like(w)), 0.0);
}
