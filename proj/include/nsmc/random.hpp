#pragma once

#include <cstdint>
#include <random>

#include "nsmc/model.hpp"

namespace nsmc {

using Rng = std::mt19937_64;

/// Named sub-streams derived from a root seed. Each generator draws from its
/// own stream so any component can be regenerated in isolation.
enum class Stream : std::uint64_t {
    Weights = 1,
    Features = 2,
    PrimedFeatures = 3,
    Edges = 4,
    PrimedEdges = 5,
    Responses = 6,
    PrimedResponses = 7,
    Init = 8,
    TestSet = 9,
    KMeans = 10,
    Subsample = 11,
    Mixture = 12,
    Items = 13,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);
inline std::uint64_t derive_seed(std::uint64_t root, Stream stream) {
    return derive_seed(root, static_cast<std::uint64_t>(stream));
}

inline Rng make_rng(std::uint64_t root, Stream stream) { return Rng(derive_seed(root, stream)); }

/// rows x cols matrix of i.i.d. N(0, 1) draws, filled column-major.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

} // namespace nsmc
