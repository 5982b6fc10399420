#pragma once

#include "nsmc/loss.hpp"

namespace nsmc {

/// Squared loss (1/n) sum (y - Theta)^2 with nonlinear embeddings. Uses the
/// activation, tied and fixed-row fields of `opts`; pair fields are ignored.
LossReport nimc_loss_grad(const WeightPair& weights, const SampleBatch& samples, const LossOptions& opts);

double nimc_loss_value(const WeightPair& weights, const SampleBatch& samples, const LossOptions& opts);

/// Response preprocessing applied before the squared-loss baselines.
struct VarianceStabilizer {
    enum class Kind { None, BinomialArcsin, PoissonSqrt };
    Kind kind = Kind::None;
    int trials = 1;

    static VarianceStabilizer none() { return {}; }
    static VarianceStabilizer binomial_arcsin(int trials) { return {Kind::BinomialArcsin, trials}; }
    static VarianceStabilizer poisson_sqrt() { return {Kind::PoissonSqrt, 1}; }
};

/// arcsin(y / N_B) or sqrt(y). The arcsin form is applied as-is, without the
/// square root of the textbook angular transform. Throws std::domain_error
/// outside [0, N_B] (resp. y < 0).
double variance_stabilize(const VarianceStabilizer& how, double y);

SampleBatch variance_stabilize(const VarianceStabilizer& how, SampleBatch batch);

/// Pseudo-likelihood with identity activations on both sides.
LossReport smc_loss_grad(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                         LossOptions opts);

/// Squared loss with identity activations on both sides.
LossReport imc_loss_grad(const WeightPair& weights, const SampleBatch& samples, LossOptions opts);

} // namespace nsmc
