#pragma once

// Reductions over the m x m' grid of cross pairs (k in Omega, l in Omega').
//
// Every quantity the loss needs from the pair grid is a row sum or column sum
// of a per-pair scalar, so the O(m^2) work touches only (y, Theta) scalars.
// Two implementations are kept: a plain serial reference used by tests and
// benchmarks, and an OpenMP kernel whose result is independent of the thread
// count (rows are processed in fixed-size blocks and block partials are
// reduced in block order).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nsmc {

/// Per-pair scalars. u = dy * dtheta; loss term softplus(-u);
/// A = dy^2 sigma(u) sigma(-u); B = dy sigma(-u).
struct PairTerm {
    double loss;
    double a;
    double b;
};

inline PairTerm pair_term(double dy, double dtheta, bool need_loss) {
    if (dy == 0.0) {
        return {need_loss ? 0.6931471805599453 : 0.0, 0.0, 0.0};
    }
    const double u = dy * dtheta;
    const double e = std::exp(-std::abs(u));
    const double inv = 1.0 / (1.0 + e);
    // sigma(-u): e/(1+e) for u >= 0, 1/(1+e) for u < 0
    const double sig_neg = u >= 0.0 ? e * inv : inv;
    PairTerm t;
    t.loss = need_loss ? (std::max(-u, 0.0) + std::log1p(e)) : 0.0;
    t.a = dy * dy * e * inv * inv;
    t.b = dy * sig_neg;
    return t;
}

/// Scalar view of one side of the pair grid.
struct PairSide {
    std::span<const double> y;
    std::span<const double> theta;
};

struct PairSums {
    long double loss_sum = 0.0L;
    std::vector<double> row_b; ///< sum over l of B_kl, length m
    std::vector<double> col_b; ///< sum over k of B_kl, length m'
    double pair_count = 0.0;   ///< normalizer (m m', or the subsample size)
};

/// Explicit A_kl matrix plus B row/column sums, for Hessian assembly.
struct PairCurvature {
    Eigen::MatrixXd a;         ///< m x m'
    std::vector<double> row_a; ///< sum over l of A_kl
    std::vector<double> col_a; ///< sum over k of A_kl
    std::vector<double> row_b;
    std::vector<double> col_b;
    double pair_count = 0.0;
};

using PairList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

namespace serial {

PairSums pair_sums(const PairSide& left, const PairSide& right, bool need_loss);
PairSums pair_sums(const PairSide& left, const PairSide& right, const PairList& pairs, bool need_loss);
PairCurvature pair_curvature(const PairSide& left, const PairSide& right);

} // namespace serial

namespace parallel {

/// Rows per work block. Fixed so the reduction tree never depends on threads.
inline constexpr std::size_t kBlockRows = 32;

PairSums pair_sums(const PairSide& left, const PairSide& right, bool need_loss);
PairSums pair_sums(const PairSide& left, const PairSide& right, const PairList& pairs, bool need_loss);
PairCurvature pair_curvature(const PairSide& left, const PairSide& right);

} // namespace parallel

/// Uniform sample of `count` distinct cells of the m x m' grid, sorted
/// row-major. Throws std::invalid_argument if count > m m'.
PairList subsample_pairs(std::size_t m, std::size_t m_prime, std::size_t count, std::uint64_t seed);

} // namespace nsmc
