#include <algorithm>
#include <stdexcept>

#include <omp.h>

#include "nsmc/pair_kernels.hpp"

namespace nsmc::parallel {

namespace {

std::size_t block_count(std::size_t rows) { return (rows + kBlockRows - 1) / kBlockRows; }

void check_sides(const PairSide& left, const PairSide& right) {
    if (left.y.size() != left.theta.size() || right.y.size() != right.theta.size()) {
        throw std::invalid_argument("pair kernel: y and theta lengths differ");
    }
    if (left.y.empty() || right.y.empty()) {
        throw std::invalid_argument("pair kernel: empty sample set");
    }
}

// Sums block partials in block order into `out`.
void reduce_columns(const std::vector<double>& partials, std::size_t blocks, std::size_t width,
                    std::vector<double>& out) {
    out.assign(width, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        const double* src = partials.data() + b * width;
        for (std::size_t l = 0; l < width; ++l) out[l] += src[l];
    }
}

// One row of the pair grid at a time, with Eigen's vectorized exp/log1p.
// dy == 0 needs no special case: u = 0 gives loss ln 2 and A = B = 0.
// e lies in (0, 1], so log(1 + e) loses at most ~1e-16 absolute against log1p.
struct RowTerms {
    Eigen::ArrayXd loss;
    Eigen::ArrayXd a;
    Eigen::ArrayXd b;
};

void row_terms(double yk, double tk, const Eigen::Map<const Eigen::ArrayXd>& y_right,
               const Eigen::Map<const Eigen::ArrayXd>& t_right, bool need_loss, bool need_a, RowTerms& out) {
    const Eigen::ArrayXd dy = yk - y_right;
    const Eigen::ArrayXd u = dy * (tk - t_right);
    const Eigen::ArrayXd e = (-u.abs()).exp();
    const Eigen::ArrayXd inv = (1.0 + e).inverse();
    out.b = dy * (u >= 0.0).select(e * inv, inv);
    if (need_a) out.a = dy.square() * e * inv.square();
    if (need_loss) out.loss = (-u).max(0.0) + (1.0 + e).log();
}

Eigen::Map<const Eigen::ArrayXd> as_array(std::span<const double> s) {
    return {s.data(), static_cast<Eigen::Index>(s.size())};
}

} // namespace

PairSums pair_sums(const PairSide& left, const PairSide& right, bool need_loss) {
    check_sides(left, right);
    const std::size_t m = left.y.size();
    const std::size_t mp = right.y.size();
    const std::size_t blocks = block_count(m);
    const auto y_right = as_array(right.y);
    const auto t_right = as_array(right.theta);

    PairSums out;
    out.row_b.assign(m, 0.0);
    std::vector<double> row_loss(m, 0.0);
    std::vector<double> col_partial(blocks * mp, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(blocks); ++blk) {
        const std::size_t k0 = static_cast<std::size_t>(blk) * kBlockRows;
        const std::size_t k1 = std::min(m, k0 + kBlockRows);
        Eigen::Map<Eigen::ArrayXd> col(col_partial.data() + static_cast<std::size_t>(blk) * mp,
                                       static_cast<Eigen::Index>(mp));
        RowTerms t;
        for (std::size_t k = k0; k < k1; ++k) {
            row_terms(left.y[k], left.theta[k], y_right, t_right, need_loss, false, t);
            if (need_loss) row_loss[k] = t.loss.sum();
            out.row_b[k] = t.b.sum();
            col += t.b;
        }
    }

    reduce_columns(col_partial, blocks, mp, out.col_b);
    for (std::size_t k = 0; k < m; ++k) out.loss_sum += row_loss[k];
    out.pair_count = static_cast<double>(m) * static_cast<double>(mp);
    return out;
}

PairSums pair_sums(const PairSide& left, const PairSide& right, const PairList& pairs, bool need_loss) {
    check_sides(left, right);
    const std::size_t m = left.y.size();
    const std::size_t mp = right.y.size();
    const std::size_t blocks = block_count(m);

    // Pairs are sorted row-major; find where each row block starts.
    std::vector<std::size_t> starts(blocks + 1, pairs.size());
    {
        std::size_t p = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto k0 = static_cast<std::uint32_t>(b * kBlockRows);
            while (p < pairs.size() && pairs[p].first < k0) ++p;
            starts[b] = p;
        }
    }

    PairSums out;
    out.row_b.assign(m, 0.0);
    std::vector<double> block_loss(blocks, 0.0);
    std::vector<double> col_partial(blocks * mp, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(blocks); ++blk) {
        const auto b = static_cast<std::size_t>(blk);
        double* col = col_partial.data() + b * mp;
        double loss = 0.0;
        for (std::size_t p = starts[b]; p < starts[b + 1]; ++p) {
            const auto [k, l] = pairs[p];
            const PairTerm t = pair_term(left.y[k] - right.y[l], left.theta[k] - right.theta[l], need_loss);
            loss += t.loss;
            out.row_b[k] += t.b;
            col[l] += t.b;
        }
        block_loss[b] = loss;
    }

    reduce_columns(col_partial, blocks, mp, out.col_b);
    for (const double v : block_loss) out.loss_sum += v;
    out.pair_count = static_cast<double>(pairs.size());
    return out;
}

PairCurvature pair_curvature(const PairSide& left, const PairSide& right) {
    check_sides(left, right);
    const std::size_t m = left.y.size();
    const std::size_t mp = right.y.size();
    const std::size_t blocks = block_count(m);
    const auto y_right = as_array(right.y);
    const auto t_right = as_array(right.theta);

    PairCurvature out;
    out.a.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(mp));
    out.row_a.assign(m, 0.0);
    out.row_b.assign(m, 0.0);
    std::vector<double> col_a_partial(blocks * mp, 0.0);
    std::vector<double> col_b_partial(blocks * mp, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(blocks); ++blk) {
        const std::size_t k0 = static_cast<std::size_t>(blk) * kBlockRows;
        const std::size_t k1 = std::min(m, k0 + kBlockRows);
        const auto off = static_cast<std::size_t>(blk) * mp;
        Eigen::Map<Eigen::ArrayXd> ca(col_a_partial.data() + off, static_cast<Eigen::Index>(mp));
        Eigen::Map<Eigen::ArrayXd> cb(col_b_partial.data() + off, static_cast<Eigen::Index>(mp));
        RowTerms t;
        for (std::size_t k = k0; k < k1; ++k) {
            row_terms(left.y[k], left.theta[k], y_right, t_right, false, true, t);
            out.a.row(static_cast<Eigen::Index>(k)) = t.a.matrix().transpose();
            out.row_a[k] = t.a.sum();
            out.row_b[k] = t.b.sum();
            ca += t.a;
            cb += t.b;
        }
    }

    reduce_columns(col_a_partial, blocks, mp, out.col_a);
    reduce_columns(col_b_partial, blocks, mp, out.col_b);
    out.pair_count = static_cast<double>(m) * static_cast<double>(mp);
    return out;
}

} // namespace nsmc::parallel
