#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nsmc/loss.hpp"
#include "nsmc/model.hpp"

namespace nsmc {

/// Any objective that reports a value and a (projected) gradient.
using Objective = std::function<LossReport(const WeightPair&)>;

struct GdConfig {
    std::optional<double> step; ///< nullopt selects the step by estimate_step at the start
    /// Multiplies the estimated step; ignored when `step` is set.
    double step_scale = 1.0;
    int max_iters = 2000;
    double grad_tol = 1e-8;
    std::optional<WeightPair> trace_truth;
    /// A loss above this multiple of the initial loss counts as divergence.
    double divergence_factor = 1e6;
};

struct GdRecord {
    int iter = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double dist_sq = std::numeric_limits<double>::quiet_NaN(); ///< NaN without trace_truth
};

struct GdTrace {
    std::vector<GdRecord> records;
};

struct GdResult {
    WeightPair weights;
    GdTrace trace;
    double step = 0.0;
    int iterations = 0;
    bool converged = false; ///< stopped on grad_tol rather than max_iters
};

/// Raised on a non-finite or runaway iterate; carries the trace so far.
class GdDiverged : public std::runtime_error {
public:
    GdDiverged(const std::string& what, GdTrace trace_) : std::runtime_error(what), trace(std::move(trace_)) {}
    GdTrace trace;
};

/// Truth plus a Gaussian perturbation rescaled so that the joint squared
/// Frobenius distance is exactly radius_sq. With fix_first_row the
/// perturbation leaves the first row of U untouched.
WeightPair init_near_truth(const WeightPair& truth, double radius_sq, bool fix_first_row, std::uint64_t seed);

/// W <- W - step * grad(W) until grad norm < grad_tol or max_iters steps.
GdResult gd_minimize(const Objective& objective, const WeightPair& start, const GdConfig& cfg);

/// 1 / lambda_max, with lambda_max from 30 power iterations on finite-difference
/// Hessian-vector products (difference step 1e-5). Throws std::runtime_error if
/// the Rayleigh quotient still moves by more than 1% at the last iteration.
double estimate_step(const Objective& objective, const WeightPair& start);

struct ContractionFit {
    double rho = 1.0;       ///< exp(slope) of log dist_sq against iteration
    double r_squared = 1.0; ///< of the same least-squares line
    double slope_se = 0.0;  ///< standard error of the fitted slope
    std::size_t points = 0;
};

/// Least-squares fit over the records with positive distance (the positive
/// prefix). Throws std::invalid_argument with fewer than 10 usable records.
ContractionFit fit_contraction_rate(const GdTrace& trace);

/// Leading records whose dist_sq is still at least `factor` times the smallest
/// distance reached, i.e. the part of the run before the statistical floor.
/// With the default factor 2 the transient still dominates the floor.
GdTrace pre_plateau(const GdTrace& trace, double factor = 2.0);

} // namespace nsmc
