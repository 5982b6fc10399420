#include <algorithm>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "nsmc/pair_kernels.hpp"

namespace nsmc {

namespace {

void check_sides(const PairSide& left, const PairSide& right) {
    if (left.y.size() != left.theta.size() || right.y.size() != right.theta.size()) {
        throw std::invalid_argument("pair kernel: y and theta lengths differ");
    }
    if (left.y.empty() || right.y.empty()) {
        throw std::invalid_argument("pair kernel: empty sample set");
    }
}

} // namespace

namespace serial {

PairSums pair_sums(const PairSide& left, const PairSide& right, bool need_loss) {
    check_sides(left, right);
    const std::size_t m = left.y.size();
    const std::size_t mp = right.y.size();
    PairSums out;
    out.row_b.assign(m, 0.0);
    out.col_b.assign(mp, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = 0; l < mp; ++l) {
            const PairTerm t = pair_term(left.y[k] - right.y[l], left.theta[k] - right.theta[l], need_loss);
            out.loss_sum += t.loss;
            out.row_b[k] += t.b;
            out.col_b[l] += t.b;
        }
    }
    out.pair_count = static_cast<double>(m) * static_cast<double>(mp);
    return out;
}

PairSums pair_sums(const PairSide& left, const PairSide& right, const PairList& pairs, bool need_loss) {
    check_sides(left, right);
    PairSums out;
    out.row_b.assign(left.y.size(), 0.0);
    out.col_b.assign(right.y.size(), 0.0);
    for (const auto& [k, l] : pairs) {
        const PairTerm t = pair_term(left.y[k] - right.y[l], left.theta[k] - right.theta[l], need_loss);
        out.loss_sum += t.loss;
        out.row_b[k] += t.b;
        out.col_b[l] += t.b;
    }
    out.pair_count = static_cast<double>(pairs.size());
    return out;
}

PairCurvature pair_curvature(const PairSide& left, const PairSide& right) {
    check_sides(left, right);
    const std::size_t m = left.y.size();
    const std::size_t mp = right.y.size();
    PairCurvature out;
    out.a.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(mp));
    out.row_a.assign(m, 0.0);
    out.col_a.assign(mp, 0.0);
    out.row_b.assign(m, 0.0);
    out.col_b.assign(mp, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = 0; l < mp; ++l) {
            const PairTerm t = pair_term(left.y[k] - right.y[l], left.theta[k] - right.theta[l], false);
            out.a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = t.a;
            out.row_a[k] += t.a;
            out.col_a[l] += t.a;
            out.row_b[k] += t.b;
            out.col_b[l] += t.b;
        }
    }
    out.pair_count = static_cast<double>(m) * static_cast<double>(mp);
    return out;
}

} // namespace serial

PairList subsample_pairs(std::size_t m, std::size_t m_prime, std::size_t count, std::uint64_t seed) {
    const std::uint64_t total = static_cast<std::uint64_t>(m) * m_prime;
    if (count > total) throw std::invalid_argument("subsample_pairs: count exceeds the number of pairs");
    // Floyd's algorithm: `count` distinct cells, each subset equally likely.
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(count * 2);
    for (std::uint64_t j = total - count; j < total; ++j) {
        std::uniform_int_distribution<std::uint64_t> pick(0, j);
        const std::uint64_t t = pick(rng);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::uint64_t> cells(chosen.begin(), chosen.end());
    std::sort(cells.begin(), cells.end());
    PairList pairs;
    pairs.reserve(cells.size());
    for (const auto c : cells) {
        pairs.emplace_back(static_cast<std::uint32_t>(c / m_prime), static_cast<std::uint32_t>(c % m_prime));
    }
    return pairs;
}

} // namespace nsmc
