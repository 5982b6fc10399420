#include "nsmc/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include <omp.h>

#include "nsmc/random.hpp"

namespace nsmc {

double rel_error_matrix(const Matrix& est, const Matrix& truth) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
        throw std::invalid_argument("rel_error_matrix: shape mismatch");
    }
    const double denom = truth.norm();
    if (denom == 0.0) throw std::invalid_argument("rel_error_matrix: truth has zero norm");
    return (est - truth).norm() / denom;
}

double rel_error_theta(const WeightPair& est, const WeightPair& truth, ActivationKind a1, ActivationKind a2,
                       const SampleBatch& test) {
    return rel_error_theta(est, a1, a2, truth, a1, a2, test);
}

double rel_error_theta(const WeightPair& est, ActivationKind est_a1, ActivationKind est_a2, const WeightPair& truth,
                       ActivationKind a1, ActivationKind a2, const SampleBatch& test) {
    const Vector th_est =
        (embed_rows(est.u, est_a1, test.x).cwiseProduct(embed_rows(est.v, est_a2, test.z))).rowwise().sum();
    const Vector th_true =
        (embed_rows(truth.u, a1, test.x).cwiseProduct(embed_rows(truth.v, a2, test.z))).rowwise().sum();
    const double denom = th_true.squaredNorm();
    if (denom == 0.0) throw std::invalid_argument("rel_error_theta: true Theta is zero on the whole test set");
    return std::sqrt((th_est - th_true).squaredNorm() / denom);
}

double clustering_error(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("clustering_error: label vectors differ in length");
    const std::size_t n = pred.size();
    if (n < 2) throw std::invalid_argument("clustering_error: need at least 2 items");

    // Pair counts from the contingency table: C(a, 2) = a(a-1)/2.
    std::map<int, std::uint64_t> pred_sizes;
    std::map<int, std::uint64_t> truth_sizes;
    std::map<std::pair<int, int>, std::uint64_t> cells;
    for (std::size_t i = 0; i < n; ++i) {
        ++pred_sizes[pred[i]];
        ++truth_sizes[truth[i]];
        ++cells[{pred[i], truth[i]}];
    }
    auto pairs = [](std::uint64_t a) { return a * (a - 1) / 2; };
    std::uint64_t both = 0;
    for (const auto& [key, c] : cells) both += pairs(c);
    std::uint64_t same_truth = 0;
    for (const auto& [key, c] : truth_sizes) same_truth += pairs(c);
    std::uint64_t same_pred = 0;
    for (const auto& [key, c] : pred_sizes) same_pred += pairs(c);

    const std::uint64_t split = same_truth - both;
    const std::uint64_t merged = same_pred - both;
    return static_cast<double>(split + merged) / static_cast<double>(pairs(n));
}

double within_cluster_ss(const Matrix& points, std::span<const int> labels) {
    std::map<int, std::pair<Vector, int>> sums;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        auto [it, fresh] = sums.try_emplace(labels[static_cast<std::size_t>(i)], Vector::Zero(points.cols()), 0);
        it->second.first += points.row(i).transpose();
        ++it->second.second;
    }
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const auto& [sum, count] = sums.at(labels[static_cast<std::size_t>(i)]);
        wcss += (points.row(i).transpose() - sum / count).squaredNorm();
    }
    return wcss;
}

namespace {

struct LloydState {
    Matrix centroids;
    std::vector<int> assign; // 0-based
    double wcss = 0.0;
};

double assign_points(const Matrix& points, const Matrix& centroids, std::vector<int>& assign,
                     std::vector<double>& dist) {
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = (points.row(i) - centroids.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        assign[static_cast<std::size_t>(i)] = best;
        dist[static_cast<std::size_t>(i)] = best_d;
        wcss += best_d;
    }
    return wcss;
}

LloydState lloyd(const Matrix& points, Matrix centroids, const KMeansOptions& opts) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = centroids.rows();
    LloydState st;
    st.assign.assign(static_cast<std::size_t>(n), 0);
    std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
    double previous = std::numeric_limits<double>::infinity();

    for (int it = 0; it < opts.max_iters; ++it) {
        st.wcss = assign_points(points, centroids, st.assign, dist);

        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(st.assign[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(st.assign[static_cast<std::size_t>(i)])];
        }
        bool repaired = false;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
                continue;
            }
            // Empty cluster: reseed at the point farthest from its centroid.
            Eigen::Index far = 0;
            for (Eigen::Index i = 1; i < n; ++i) {
                if (dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
            }
            centroids.row(c) = points.row(far);
            dist[static_cast<std::size_t>(far)] = 0.0;
            repaired = true;
        }
        if (!repaired && previous - st.wcss <= opts.rel_tol * std::max(st.wcss, 1e-300)) break;
        previous = st.wcss;
    }
    st.wcss = assign_points(points, centroids, st.assign, dist);
    st.centroids = std::move(centroids);
    return st;
}

Matrix kmeans_plus_plus(const Matrix& points, int k, Rng& rng) {
    const Eigen::Index n = points.rows();
    Matrix centroids(k, points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centroids.row(0) = points.row(first(rng));
    Vector d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double target = unit(rng) * total;
            for (pick = 0; pick < n - 1; ++pick) {
                target -= d2(pick);
                if (target < 0.0) break;
            }
        } else {
            pick = first(rng);
        }
        centroids.row(c) = points.row(pick);
        d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

KMeansResult to_result(const LloydState& st) {
    KMeansResult out;
    out.labels.reserve(st.assign.size());
    for (const int a : st.assign) out.labels.push_back(a + 1);
    out.wcss = st.wcss;
    return out;
}

void check_kmeans_args(const Matrix& points, int k) {
    if (k < 1) throw std::invalid_argument("kmeans: K must be >= 1");
    if (points.rows() < k) {
        throw std::invalid_argument("kmeans: " + std::to_string(points.rows()) + " points for K = " +
                                    std::to_string(k));
    }
}

} // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts) {
    check_kmeans_args(points, k);
    const int restarts = std::max(opts.restarts, 1);
    std::vector<LloydState> runs(static_cast<std::size_t>(restarts));
#pragma omp parallel for schedule(dynamic, 1)
    for (int rs = 0; rs < restarts; ++rs) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rs) + 1));
        runs[static_cast<std::size_t>(rs)] = lloyd(points, kmeans_plus_plus(points, k, rng), opts);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].wcss < runs[best].wcss) best = i;
    }
    return to_result(runs[best]);
}

KMeansResult kmeans_from_labels(const Matrix& points, int k, std::span<const int> initial,
                                const KMeansOptions& opts) {
    check_kmeans_args(points, k);
    if (initial.size() != static_cast<std::size_t>(points.rows())) {
        throw std::invalid_argument("kmeans_from_labels: label count differs from point count");
    }
    Matrix centroids = Matrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = initial[static_cast<std::size_t>(i)] - 1;
        if (c < 0 || c >= k) throw std::invalid_argument("kmeans_from_labels: label outside 1..K");
        centroids.row(c) += points.row(i);
        ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) /= counts[static_cast<std::size_t>(c)];
    }
    return to_result(lloyd(points, centroids, opts));
}

Matrix top_r_left_singular(const Matrix& embeddings, Eigen::Index r_keep) {
    if (r_keep < 1 || r_keep > std::min(embeddings.rows(), embeddings.cols())) {
        throw std::invalid_argument("top_r_left_singular: r_keep = " + std::to_string(r_keep) +
                                    " outside 1..min(n, r)");
    }
    Eigen::JacobiSVD<Matrix> svd(embeddings, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(r_keep);
}

} // namespace nsmc
