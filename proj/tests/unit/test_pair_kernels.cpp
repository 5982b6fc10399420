#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "nsmc/pair_kernels.hpp"
#include "nsmc/parallel.hpp"

using namespace nsmc;

namespace {

struct Sides {
    std::vector<double> y, t, yp, tp;
    PairSide left() const { return {y, t}; }
    PairSide right() const { return {yp, tp}; }
};

Sides random_sides(std::size_t m, std::size_t mp, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.5);
    Sides s;
    for (std::size_t i = 0; i < m; ++i) {
        s.y.push_back(n(rng));
        s.t.push_back(n(rng));
    }
    for (std::size_t i = 0; i < mp; ++i) {
        s.yp.push_back(n(rng));
        s.tp.push_back(n(rng));
    }
    // a few tied responses exercise the dy == 0 branch
    s.yp[0] = s.y[0];
    return s;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
    }
    return worst;
}

} // namespace

TEST(PairKernels, ParallelMatchesSerial) {
    for (auto [m, mp] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 5}, {33, 64}, {257, 130}}) {
        const Sides s = random_sides(m, mp, m * 31 + mp);
        const PairSums a = serial::pair_sums(s.left(), s.right(), true);
        const PairSums b = parallel::pair_sums(s.left(), s.right(), true);
        EXPECT_NEAR(static_cast<double>(a.loss_sum), static_cast<double>(b.loss_sum),
                    1e-12 * static_cast<double>(a.loss_sum));
        EXPECT_LT(max_rel(b.row_b, a.row_b), 1e-12);
        EXPECT_LT(max_rel(b.col_b, a.col_b), 1e-12);
        EXPECT_EQ(a.pair_count, b.pair_count);
        EXPECT_EQ(a.pair_count, static_cast<double>(m * mp));
    }
}

TEST(PairKernels, SerialMatchesPairTermSums) {
    const Sides s = random_sides(9, 6, 2);
    const PairSums a = serial::pair_sums(s.left(), s.right(), true);
    long double loss = 0.0L;
    for (std::size_t k = 0; k < 9; ++k) {
        double row = 0.0;
        for (std::size_t l = 0; l < 6; ++l) {
            const long double dy = s.y[k] - s.yp[l];
            const long double u = dy * (s.t[k] - s.tp[l]);
            loss += std::log1p(std::exp(-u));
            row += static_cast<double>(dy / (1.0L + std::exp(u)));
        }
        EXPECT_NEAR(a.row_b[k], row, 1e-13);
    }
    EXPECT_NEAR(static_cast<double>(a.loss_sum), static_cast<double>(loss), 1e-12);
}

TEST(PairKernels, CurvatureMatchesSerial) {
    const Sides s = random_sides(40, 35, 3);
    const PairCurvature a = serial::pair_curvature(s.left(), s.right());
    const PairCurvature b = parallel::pair_curvature(s.left(), s.right());
    EXPECT_LT((a.a - b.a).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(max_rel(b.row_a, a.row_a), 1e-12);
    EXPECT_LT(max_rel(b.col_a, a.col_a), 1e-12);
    EXPECT_LT(max_rel(b.row_b, a.row_b), 1e-12);
    for (Eigen::Index k = 0; k < 40; ++k) EXPECT_NEAR(a.a.row(k).sum(), a.row_a[k], 1e-12);
}

TEST(PairKernels, SubsampledSumsAgree) {
    const Sides s = random_sides(50, 40, 4);
    const PairList pairs = subsample_pairs(50, 40, 300, 9);
    const PairSums a = serial::pair_sums(s.left(), s.right(), pairs, true);
    const PairSums b = parallel::pair_sums(s.left(), s.right(), pairs, true);
    EXPECT_EQ(a.pair_count, 300.0);
    EXPECT_NEAR(static_cast<double>(a.loss_sum), static_cast<double>(b.loss_sum), 1e-10);
    EXPECT_LT(max_rel(b.row_b, a.row_b), 1e-12);
    EXPECT_LT(max_rel(b.col_b, a.col_b), 1e-12);
}

TEST(PairKernels, ResultIndependentOfThreadCount) {
    const Sides s = random_sides(300, 280, 5);
    set_thread_count(1);
    const PairSums one = parallel::pair_sums(s.left(), s.right(), true);
    set_thread_count(3);
    const PairSums three = parallel::pair_sums(s.left(), s.right(), true);
    set_thread_count(1);
    EXPECT_EQ(one.loss_sum, three.loss_sum);
    EXPECT_EQ(one.row_b, three.row_b);
    EXPECT_EQ(one.col_b, three.col_b);
}

TEST(SubsamplePairs, DistinctSortedAndSeeded) {
    const PairList p = subsample_pairs(20, 15, 100, 7);
    ASSERT_EQ(p.size(), 100u);
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    std::set<std::pair<std::uint32_t, std::uint32_t>> uniq(p.begin(), p.end());
    EXPECT_EQ(uniq.size(), 100u);
    for (auto [k, l] : p) {
        EXPECT_LT(k, 20u);
        EXPECT_LT(l, 15u);
    }
    EXPECT_EQ(p, subsample_pairs(20, 15, 100, 7));
    EXPECT_NE(p, subsample_pairs(20, 15, 100, 8));
    EXPECT_EQ(subsample_pairs(4, 5, 20, 1).size(), 20u);
    EXPECT_THROW(subsample_pairs(4, 5, 21, 1), std::invalid_argument);
}
