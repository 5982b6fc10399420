#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsmc/datagen.hpp"
#include "nsmc/model.hpp"

namespace nsmc {

/// ||est - truth||_F / ||truth||_F. Throws std::invalid_argument on a shape
/// mismatch or a zero truth.
double rel_error_matrix(const Matrix& est, const Matrix& truth);

/// sqrt(sum (Theta_hat - Theta*)^2 / sum Theta*^2) over the rows of `test`
/// (row k pairs test.x row k with test.z row k; y is ignored).
double rel_error_theta(const WeightPair& est, const WeightPair& truth, ActivationKind a1, ActivationKind a2,
                       const SampleBatch& test);

/// Same, with the estimate evaluated under its own activations (identity for
/// the bilinear baselines).
double rel_error_theta(const WeightPair& est, ActivationKind est_a1, ActivationKind est_a2, const WeightPair& truth,
                       ActivationKind a1, ActivationKind a2, const SampleBatch& test);

/// Fraction of item pairs on which the two clusterings disagree: pairs
/// together in `truth` but split by `pred`, plus pairs apart in `truth` but
/// merged by `pred`, over n(n-1)/2. Labels are arbitrary integers.
double clustering_error(std::span<const int> pred, std::span<const int> truth);

struct KMeansOptions {
    int restarts = 20;
    int max_iters = 300;
    double rel_tol = 1e-9;
};

struct KMeansResult {
    std::vector<int> labels; ///< 1..K
    double wcss = 0.0;       ///< within-cluster sum of squares
};

/// Best-of-`restarts` Lloyd's algorithm with k-means++ seeding, deterministic
/// in `seed`. Restarts run concurrently; ties go to the lowest restart index.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts = {});

/// Lloyd's algorithm from a given labelling (labels 1..K).
KMeansResult kmeans_from_labels(const Matrix& points, int k, std::span<const int> initial,
                                const KMeansOptions& opts = {});

double within_cluster_ss(const Matrix& points, std::span<const int> labels);

/// Leading r_keep left singular vectors of `embeddings` (items as rows), one
/// row of coordinates per item.
Matrix top_r_left_singular(const Matrix& embeddings, Eigen::Index r_keep);

} // namespace nsmc
