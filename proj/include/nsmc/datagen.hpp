#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nsmc/model.hpp"
#include "nsmc/random.hpp"

namespace nsmc {

/// Exponential-family edge-response law with natural parameter Theta.
struct ResponseLaw {
    enum class Kind { GaussianScaled, GaussianMisspec, Binomial, Poisson };

    Kind kind = Kind::GaussianScaled;
    double sigma = 1.0; ///< GaussianScaled: y ~ N(Theta sigma^2, sigma^2)
    double tau = 0.0;   ///< GaussianMisspec: y ~ N((1-tau)^2 Theta, (1-tau)^2)
    int trials = 1;     ///< Binomial: y ~ B(trials, logistic(Theta))

    static ResponseLaw gaussian(double sigma = 1.0);
    static ResponseLaw gaussian_misspec(double tau);
    static ResponseLaw binomial(int trials);
    static ResponseLaw poisson();

    double draw(double theta, Rng& rng) const;
    [[nodiscard]] std::string describe() const;
};

/// Thrown when a Poisson mean would overflow (exp(Theta) > 1e15). The Binomial
/// mean N_B * sigmoid(Theta) is bounded and never triggers it.
class ResponseOverflow : public std::domain_error {
public:
    explicit ResponseOverflow(double theta);
    double theta;
};

/// One observed edge. Indices are zero-based into the owning FeaturePool.
struct EdgeSample {
    int row = 0;
    int col = 0;
    double y = 0.0;
};

struct EdgeSampleSet {
    std::vector<EdgeSample> entries;
    double beta = 0.0; ///< recorded bound: empirical max |y|

    [[nodiscard]] std::size_t size() const { return entries.size(); }
    void record_beta();
};

/// Samples materialized against their features: row k is (x_k, z_k, y_k).
struct SampleBatch {
    Matrix x;
    Matrix z;
    Vector y;

    [[nodiscard]] Eigen::Index size() const { return y.size(); }
};

SampleBatch gather(const FeaturePool& pool, const EdgeSampleSet& set);

/// Multiset union: rows of `b` appended after rows of `a`.
SampleBatch concat(const SampleBatch& a, const SampleBatch& b);

struct GroundTruth {
    WeightPair weights;
    std::optional<Vector> known_first_row; ///< first row of U when pinned
};

struct GenerativeSpec {
    WeightPair weights;
    ActivationKind a1 = ActivationKind::ReLU;
    ActivationKind a2 = ActivationKind::ReLU;
    ResponseLaw law;
    int n1 = 400;
    int n2 = 400;
    int m = 2000;
    std::uint64_t seed = 1;
    bool share_pools = false; ///< ablation: draw Omega' from the same pool as Omega
};

/// Two independent observation sets over (by default) disjoint feature pools.
struct SplitSample {
    FeaturePool pool;
    FeaturePool pool_prime;
    EdgeSampleSet omega;
    EdgeSampleSet omega_prime;

    [[nodiscard]] SampleBatch batch() const { return gather(pool, omega); }
    [[nodiscard]] SampleBatch batch_prime() const { return gather(pool_prime, omega_prime); }
};

struct MixtureSample {
    Matrix features;
    std::vector<int> labels; ///< 1..K
};

/// Gaussian entries normalized so sigma_r(U) = sigma_r(V) = 1. Rank-deficient
/// draws are resampled; throws std::runtime_error after 10 failures.
GroundTruth gen_ground_truth(int d1, int d2, int r, bool fix_first_row, std::uint64_t seed);

FeaturePool gen_features(int n1, int n2, int d1, int d2, std::uint64_t seed);

/// Row i ~ N(center_{c_i}, spread^2 I) with c_i uniform over the K rows of `centers`.
MixtureSample gen_mixture_features(int n, const Matrix& centers, double spread, std::uint64_t seed);

/// m edges drawn uniformly with replacement; y from `law` at the edge's Theta.
EdgeSampleSet sample_edges(const FeaturePool& pool, const WeightPair& weights, ActivationKind a1,
                           ActivationKind a2, const ResponseLaw& law, int m, std::uint64_t seed);

SplitSample split_samples(const GenerativeSpec& spec);

/// y = 1 iff the two items share a label.
std::vector<double> gen_similarity_labels(std::span<const int> labels,
                                          std::span<const std::pair<int, int>> pairs);

} // namespace nsmc
