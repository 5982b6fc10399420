#include "nsmc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nsmc {

ResponseLaw ResponseLaw::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian law needs sigma > 0");
    ResponseLaw law;
    law.kind = Kind::GaussianScaled;
    law.sigma = sigma;
    return law;
}

ResponseLaw ResponseLaw::gaussian_misspec(double tau) {
    if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("misspecification tau must lie in [0, 1)");
    ResponseLaw law;
    law.kind = Kind::GaussianMisspec;
    law.tau = tau;
    return law;
}

ResponseLaw ResponseLaw::binomial(int trials) {
    if (trials < 1) throw std::invalid_argument("binomial law needs N_B >= 1");
    ResponseLaw law;
    law.kind = Kind::Binomial;
    law.trials = trials;
    return law;
}

ResponseLaw ResponseLaw::poisson() {
    ResponseLaw law;
    law.kind = Kind::Poisson;
    return law;
}

ResponseOverflow::ResponseOverflow(double theta_)
    : std::domain_error("response mean overflow: exp(Theta) > 1e15 at Theta = " + std::to_string(theta_)),
      theta(theta_) {}

namespace {

constexpr double kMaxLogMean = 34.538776394910684; // log(1e15)

} // namespace

double ResponseLaw::draw(double theta, Rng& rng) const {
    switch (kind) {
    case Kind::GaussianScaled: {
        std::normal_distribution<double> normal(theta * sigma * sigma, sigma);
        return normal(rng);
    }
    case Kind::GaussianMisspec: {
        const double s = (1.0 - tau) * (1.0 - tau);
        std::normal_distribution<double> normal(s * theta, 1.0 - tau);
        return normal(rng);
    }
    case Kind::Binomial: {
        std::binomial_distribution<int> binom(trials, logistic(theta));
        return static_cast<double>(binom(rng));
    }
    case Kind::Poisson: {
        if (theta > kMaxLogMean) throw ResponseOverflow(theta);
        std::poisson_distribution<long long> pois(std::exp(theta));
        return static_cast<double>(pois(rng));
    }
    }
    return 0.0;
}

std::string ResponseLaw::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::GaussianScaled: os << "gaussian(sigma=" << sigma << ")"; break;
    case Kind::GaussianMisspec: os << "gaussian_misspec(tau=" << tau << ")"; break;
    case Kind::Binomial: os << "binomial(N_B=" << trials << ")"; break;
    case Kind::Poisson: os << "poisson"; break;
    }
    return os.str();
}

void EdgeSampleSet::record_beta() {
    beta = 0.0;
    for (const auto& e : entries) beta = std::max(beta, std::abs(e.y));
}

SampleBatch gather(const FeaturePool& pool, const EdgeSampleSet& set) {
    const auto m = static_cast<Eigen::Index>(set.size());
    SampleBatch batch{Matrix(m, pool.x.cols()), Matrix(m, pool.z.cols()), Vector(m)};
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& e = set.entries[static_cast<std::size_t>(k)];
        if (e.row < 0 || e.row >= pool.x.rows() || e.col < 0 || e.col >= pool.z.rows()) {
            throw std::out_of_range("gather: edge index outside feature pool");
        }
        batch.x.row(k) = pool.x.row(e.row);
        batch.z.row(k) = pool.z.row(e.col);
        batch.y(k) = e.y;
    }
    return batch;
}

SampleBatch concat(const SampleBatch& a, const SampleBatch& b) {
    if (a.x.cols() != b.x.cols() || a.z.cols() != b.z.cols()) {
        throw std::invalid_argument("concat: feature dimensions differ");
    }
    SampleBatch out{Matrix(a.size() + b.size(), a.x.cols()), Matrix(a.size() + b.size(), a.z.cols()),
                    Vector(a.size() + b.size())};
    out.x << a.x, b.x;
    out.z << a.z, b.z;
    out.y << a.y, b.y;
    return out;
}

GroundTruth gen_ground_truth(int d1, int d2, int r, bool fix_first_row, std::uint64_t seed) {
    if (r < 1 || d1 < 1 || d2 < 1 || r > std::min(d1, d2)) {
        throw std::invalid_argument("gen_ground_truth: need 1 <= r <= min(d1, d2)");
    }
    Rng rng(seed);
    for (int attempt = 0; attempt < 10; ++attempt) {
        Matrix u = gaussian_matrix(d1, r, rng);
        Matrix v = gaussian_matrix(d2, r, rng);
        try {
            GroundTruth truth{WeightPair(normalize_ground_truth(u), normalize_ground_truth(v)), std::nullopt};
            if (fix_first_row) truth.known_first_row = truth.weights.u.row(0).transpose();
            return truth;
        } catch (const std::invalid_argument&) {
            continue;
        }
    }
    throw std::runtime_error("gen_ground_truth: 10 consecutive rank-deficient draws");
}

FeaturePool gen_features(int n1, int n2, int d1, int d2, std::uint64_t seed) {
    if (n1 < 1 || n2 < 1 || d1 < 1 || d2 < 1) throw std::invalid_argument("gen_features: sizes must be positive");
    Rng rng(seed);
    FeaturePool pool;
    // Row-major fill so that row i depends only on the first i rows' draws.
    pool.x = gaussian_matrix(d1, n1, rng).transpose();
    pool.z = gaussian_matrix(d2, n2, rng).transpose();
    return pool;
}

MixtureSample gen_mixture_features(int n, const Matrix& centers, double spread, std::uint64_t seed) {
    if (n < 1 || centers.rows() < 1) throw std::invalid_argument("gen_mixture_features: need n >= 1 and K >= 1");
    if (spread < 0.0) throw std::invalid_argument("gen_mixture_features: spread must be >= 0");
    Rng rng(seed);
    const auto k = static_cast<int>(centers.rows());
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    MixtureSample out{Matrix(n, centers.cols()), std::vector<int>(static_cast<std::size_t>(n))};
    for (int i = 0; i < n; ++i) {
        const int c = pick(rng);
        out.labels[static_cast<std::size_t>(i)] = c + 1;
        for (Eigen::Index j = 0; j < centers.cols(); ++j) {
            const double noise = normal(rng);
            out.features(i, j) = centers(c, j) + spread * noise;
        }
    }
    return out;
}

EdgeSampleSet sample_edges(const FeaturePool& pool, const WeightPair& weights, ActivationKind a1,
                           ActivationKind a2, const ResponseLaw& law, int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sample_edges: m must be >= 1");
    if (pool.x.cols() != weights.d1() || pool.z.cols() != weights.d2()) {
        throw std::invalid_argument("sample_edges: feature pool does not match weight shapes");
    }
    const Matrix row_embed = embed_rows(weights.u, a1, pool.x);
    const Matrix col_embed = embed_rows(weights.v, a2, pool.z);

    Rng index_rng(derive_seed(seed, Stream::Edges));
    Rng response_rng(derive_seed(seed, Stream::Responses));
    std::uniform_int_distribution<int> row_pick(0, static_cast<int>(pool.x.rows()) - 1);
    std::uniform_int_distribution<int> col_pick(0, static_cast<int>(pool.z.rows()) - 1);

    EdgeSampleSet set;
    set.entries.resize(static_cast<std::size_t>(m));
    for (auto& e : set.entries) {
        e.row = row_pick(index_rng);
        e.col = col_pick(index_rng);
    }
    for (auto& e : set.entries) {
        const double th = row_embed.row(e.row).dot(col_embed.row(e.col));
        if (!std::isfinite(th)) throw std::domain_error("sample_edges: non-finite Theta");
        e.y = law.draw(th, response_rng);
    }
    set.record_beta();
    return set;
}

SplitSample split_samples(const GenerativeSpec& spec) {
    const auto d1 = static_cast<int>(spec.weights.d1());
    const auto d2 = static_cast<int>(spec.weights.d2());
    SplitSample out;
    out.pool = gen_features(spec.n1, spec.n2, d1, d2, derive_seed(spec.seed, Stream::Features));
    out.pool_prime = spec.share_pools
                         ? out.pool
                         : gen_features(spec.n1, spec.n2, d1, d2, derive_seed(spec.seed, Stream::PrimedFeatures));
    out.omega = sample_edges(out.pool, spec.weights, spec.a1, spec.a2, spec.law, spec.m,
                             derive_seed(spec.seed, Stream::Edges));
    out.omega_prime = sample_edges(out.pool_prime, spec.weights, spec.a1, spec.a2, spec.law, spec.m,
                                   derive_seed(spec.seed, Stream::PrimedEdges));
    return out;
}

std::vector<double> gen_similarity_labels(std::span<const int> labels,
                                          std::span<const std::pair<int, int>> pairs) {
    std::vector<double> y;
    y.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= labels.size() ||
            static_cast<std::size_t>(j) >= labels.size()) {
            throw std::out_of_range("gen_similarity_labels: item index out of range");
        }
        y.push_back(labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0);
    }
    return y;
}

} // namespace nsmc
