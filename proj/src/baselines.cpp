#include "nsmc/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nsmc {

LossReport nimc_loss_grad(const WeightPair& weights, const SampleBatch& samples, const LossOptions& opts) {
    const SampleTerms t = compute_sample_terms(weights, opts.a1, opts.a2, samples, opts.tied, true);
    const Vector residual = samples.y - t.theta;
    const auto n = static_cast<double>(samples.size());
    LossReport report;
    report.value = residual.squaredNorm() / n;
    const Vector flat = -(2.0 / n) * (t.gradient.transpose() * residual);
    report.grad = fold_gradient(flat, weights, opts);
    return report;
}

double nimc_loss_value(const WeightPair& weights, const SampleBatch& samples, const LossOptions& opts) {
    const SampleTerms t = compute_sample_terms(weights, opts.a1, opts.a2, samples, opts.tied, false);
    return (samples.y - t.theta).squaredNorm() / static_cast<double>(samples.size());
}

double variance_stabilize(const VarianceStabilizer& how, double y) {
    switch (how.kind) {
    case VarianceStabilizer::Kind::None: return y;
    case VarianceStabilizer::Kind::BinomialArcsin:
        if (!(y >= 0.0 && y <= how.trials)) {
            throw std::domain_error("arcsin transform: y = " + std::to_string(y) + " outside [0, " +
                                    std::to_string(how.trials) + "]");
        }
        return std::asin(y / how.trials);
    case VarianceStabilizer::Kind::PoissonSqrt:
        if (!(y >= 0.0)) throw std::domain_error("sqrt transform: negative y = " + std::to_string(y));
        return std::sqrt(y);
    }
    return y;
}

SampleBatch variance_stabilize(const VarianceStabilizer& how, SampleBatch batch) {
    for (Eigen::Index k = 0; k < batch.y.size(); ++k) batch.y(k) = variance_stabilize(how, batch.y(k));
    return batch;
}

LossReport smc_loss_grad(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                         LossOptions opts) {
    opts.a1 = ActivationKind::Identity;
    opts.a2 = ActivationKind::Identity;
    return loss_grad(weights, omega, omega_prime, opts);
}

LossReport imc_loss_grad(const WeightPair& weights, const SampleBatch& samples, LossOptions opts) {
    opts.a1 = ActivationKind::Identity;
    opts.a2 = ActivationKind::Identity;
    return nimc_loss_grad(weights, samples, opts);
}

} // namespace nsmc
