#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "nsmc/datagen.hpp"
#include "nsmc/model.hpp"

namespace nsmc {

struct LossOptions {
    ActivationKind a1 = ActivationKind::ReLU;
    ActivationKind a2 = ActivationKind::ReLU;
    /// Shared weights: Theta uses V := U and the gradient is the sum of the
    /// U- and V-chain terms, reported identically in grad.u and grad.v.
    bool tied = false;
    /// Zero the first row of the U-gradient (first row of U treated as known).
    bool fix_first_row = false;
    /// 0 evaluates all m m' pairs; otherwise a uniform subsample of this many.
    std::size_t pair_subsample = 0;
    std::uint64_t subsample_seed = 0;
    /// Debug hook: negates every B_kl. Used to check that the verification
    /// suite catches a broken gradient.
    bool flip_b_sign = false;
};

struct LossReport {
    double value = 0.0;
    WeightPair grad;
    std::optional<Matrix> hessian;
};

struct PairScalars {
    double a = 0.0;
    double b = 0.0;
};

/// A_kl and B_kl for one cross pair.
PairScalars pair_scalars(double y_k, double y_l_prime, double theta_k, double theta_l_prime);

/// Per-sample quantities at the current weights.
struct SampleTerms {
    Vector theta;    ///< Theta_k
    Matrix pre_u;    ///< m x r, u_i^T x_k
    Matrix pre_v;    ///< m x r, v_i^T z_k
    Matrix gradient; ///< m x r(d1+d2), row k = (d_k; p_k)^T = dTheta_k / d(U, V)
};

SampleTerms compute_sample_terms(const WeightPair& weights, ActivationKind a1, ActivationKind a2,
                                 const SampleBatch& batch, bool tied, bool with_gradient);

/// Folds a stacked (U; V) gradient according to the tied / fixed-row options.
WeightPair fold_gradient(const Vector& flat, const WeightPair& shape, const LossOptions& opts);

/// Pseudo-likelihood (1/m^2) sum_{k,l} softplus(-(y_k - y'_l)(Theta_k - Theta'_l)).
double loss_value(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                  const LossOptions& opts);

LossReport loss_grad(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                     const LossOptions& opts);

/// The two pieces of the Hessian: a_term is the A-weighted sum of outer
/// products (positive semidefinite), b_term the B-weighted block term.
struct HessianParts {
    Matrix a_term;
    Matrix b_term;
    [[nodiscard]] Matrix total() const { return a_term - b_term; }
};

inline constexpr Eigen::Index kMaxHessianDim = 2000;
inline constexpr double kMaxHessianPairs = 1e6;

/// Dense Hessian in block order (u_1..u_r, v_1..v_r). Ignores fix_first_row;
/// tied mode is not supported. Throws std::invalid_argument beyond
/// r(d1+d2) > 2000, or beyond 1e6 pairs without a subsample.
HessianParts loss_hessian_parts(const WeightPair& weights, const SampleBatch& omega,
                                const SampleBatch& omega_prime, const LossOptions& opts);

Matrix loss_hessian(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                    const LossOptions& opts);

} // namespace nsmc
