#include "nsmc/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nsmc/pair_kernels.hpp"

namespace nsmc {

PairScalars pair_scalars(double y_k, double y_l_prime, double theta_k, double theta_l_prime) {
    const PairTerm t = pair_term(y_k - y_l_prime, theta_k - theta_l_prime, false);
    return {t.a, t.b};
}

namespace {

void check_batch(const WeightPair& w, const SampleBatch& batch, bool tied) {
    if (batch.size() < 1) throw std::invalid_argument("loss: empty sample set");
    if (batch.x.cols() != w.d1() || batch.z.cols() != w.d2()) {
        throw std::invalid_argument("loss: feature dimensions (" + std::to_string(batch.x.cols()) + ", " +
                                    std::to_string(batch.z.cols()) + ") do not match weights (" +
                                    std::to_string(w.d1()) + ", " + std::to_string(w.d2()) + ")");
    }
    if (tied && w.d1() != w.d2()) throw std::invalid_argument("loss: tied mode requires d1 == d2");
}

Vector apply(ActivationKind kind, const Eigen::Ref<const Vector>& pre, int order) {
    switch (order) {
    case 0: return pre.unaryExpr([kind](double t) { return activation::eval(kind, t); });
    case 1: return pre.unaryExpr([kind](double t) { return activation::d1(kind, t); });
    default: return pre.unaryExpr([kind](double t) { return activation::d2(kind, t); });
    }
}

PairSums reduce_pairs(const SampleTerms& left, const SampleBatch& omega, const SampleTerms& right,
                      const SampleBatch& omega_prime, const LossOptions& opts, bool need_loss) {
    const PairSide l{{omega.y.data(), static_cast<std::size_t>(omega.y.size())},
                     {left.theta.data(), static_cast<std::size_t>(left.theta.size())}};
    const PairSide r{{omega_prime.y.data(), static_cast<std::size_t>(omega_prime.y.size())},
                     {right.theta.data(), static_cast<std::size_t>(right.theta.size())}};
    PairSums sums;
    if (opts.pair_subsample > 0) {
        const PairList pairs = subsample_pairs(l.y.size(), r.y.size(), opts.pair_subsample, opts.subsample_seed);
        sums = parallel::pair_sums(l, r, pairs, need_loss);
    } else {
        sums = parallel::pair_sums(l, r, need_loss);
    }
    if (opts.flip_b_sign) {
        for (auto& b : sums.row_b) b = -b;
        for (auto& b : sums.col_b) b = -b;
    }
    return sums;
}

Vector as_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

SampleTerms compute_sample_terms(const WeightPair& weights, ActivationKind a1, ActivationKind a2,
                                 const SampleBatch& batch, bool tied, bool with_gradient) {
    check_batch(weights, batch, tied);
    const Matrix& u = weights.u;
    const Matrix& v = tied ? weights.u : weights.v;
    const Eigen::Index m = batch.size();
    const Eigen::Index r = weights.rank();
    const Eigen::Index d1 = weights.d1();
    const Eigen::Index d2 = weights.d2();

    SampleTerms t;
    t.pre_u = batch.x * u;
    t.pre_v = batch.z * v;
    const Matrix phi_u = t.pre_u.unaryExpr([a1](double s) { return activation::eval(a1, s); });
    const Matrix phi_v = t.pre_v.unaryExpr([a2](double s) { return activation::eval(a2, s); });
    t.theta = phi_u.cwiseProduct(phi_v).rowwise().sum();
    if (!t.theta.allFinite()) throw std::domain_error("loss: non-finite Theta");

    if (with_gradient) {
        t.gradient.resize(m, r * (d1 + d2));
        for (Eigen::Index i = 0; i < r; ++i) {
            const Vector du = apply(a1, t.pre_u.col(i), 1).cwiseProduct(phi_v.col(i));
            const Vector dv = phi_u.col(i).cwiseProduct(apply(a2, t.pre_v.col(i), 1));
            t.gradient.middleCols(i * d1, d1) = du.asDiagonal() * batch.x;
            t.gradient.middleCols(r * d1 + i * d2, d2) = dv.asDiagonal() * batch.z;
        }
    }
    return t;
}

WeightPair fold_gradient(const Vector& flat, const WeightPair& shape, const LossOptions& opts) {
    WeightPair g = WeightPair::unflatten(flat, shape.d1(), shape.d2(), shape.rank());
    if (opts.tied) {
        g.u += g.v;
        g.v = g.u;
    }
    if (opts.fix_first_row) {
        g.u.row(0).setZero();
        if (opts.tied) g.v.row(0).setZero();
    }
    return g;
}

double loss_value(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                  const LossOptions& opts) {
    const SampleTerms left = compute_sample_terms(weights, opts.a1, opts.a2, omega, opts.tied, false);
    const SampleTerms right = compute_sample_terms(weights, opts.a1, opts.a2, omega_prime, opts.tied, false);
    const PairSums sums = reduce_pairs(left, omega, right, omega_prime, opts, true);
    return static_cast<double>(sums.loss_sum / sums.pair_count);
}

LossReport loss_grad(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                     const LossOptions& opts) {
    const SampleTerms left = compute_sample_terms(weights, opts.a1, opts.a2, omega, opts.tied, true);
    const SampleTerms right = compute_sample_terms(weights, opts.a1, opts.a2, omega_prime, opts.tied, true);
    const PairSums sums = reduce_pairs(left, omega, right, omega_prime, opts, true);

    // -(1/N) sum_{k,l} B_kl (g_k - g'_l) = -(1/N) (G^T rowB - G'^T colB)
    const Vector flat = -(left.gradient.transpose() * as_vector(sums.row_b) -
                          right.gradient.transpose() * as_vector(sums.col_b)) /
                        sums.pair_count;

    LossReport report;
    report.value = static_cast<double>(sums.loss_sum / sums.pair_count);
    report.grad = fold_gradient(flat, weights, opts);
    return report;
}

namespace {

// sum_k w_k M_k where M_k is the block-diagonal (Q, S; S^T, R) matrix of sample k.
Matrix second_order_blocks(const WeightPair& w, const LossOptions& opts, const SampleBatch& batch,
                           const SampleTerms& t, const Vector& weights_k) {
    const Eigen::Index r = w.rank();
    const Eigen::Index d1 = w.d1();
    const Eigen::Index d2 = w.d2();
    Matrix out = Matrix::Zero(r * (d1 + d2), r * (d1 + d2));
    for (Eigen::Index i = 0; i < r; ++i) {
        const Vector f1 = apply(opts.a1, t.pre_u.col(i), 0);
        const Vector g1 = apply(opts.a1, t.pre_u.col(i), 1);
        const Vector h1 = apply(opts.a1, t.pre_u.col(i), 2);
        const Vector f2 = apply(opts.a2, t.pre_v.col(i), 0);
        const Vector g2 = apply(opts.a2, t.pre_v.col(i), 1);
        const Vector h2 = apply(opts.a2, t.pre_v.col(i), 2);

        const Vector q = weights_k.cwiseProduct(h1.cwiseProduct(f2));
        const Vector rr = weights_k.cwiseProduct(f1.cwiseProduct(h2));
        const Vector s = weights_k.cwiseProduct(g1.cwiseProduct(g2));

        const Eigen::Index ou = i * d1;
        const Eigen::Index ov = r * d1 + i * d2;
        out.block(ou, ou, d1, d1) = batch.x.transpose() * q.asDiagonal() * batch.x;
        out.block(ov, ov, d2, d2) = batch.z.transpose() * rr.asDiagonal() * batch.z;
        const Matrix cross = batch.x.transpose() * s.asDiagonal() * batch.z;
        out.block(ou, ov, d1, d2) = cross;
        out.block(ov, ou, d2, d1) = cross.transpose();
    }
    return out;
}

} // namespace

HessianParts loss_hessian_parts(const WeightPair& weights, const SampleBatch& omega,
                                const SampleBatch& omega_prime, const LossOptions& opts) {
    if (opts.tied) throw std::invalid_argument("loss_hessian: tied mode is not supported");
    if (weights.dim() > kMaxHessianDim) {
        throw std::invalid_argument("loss_hessian: r(d1+d2) = " + std::to_string(weights.dim()) +
                                    " exceeds the verification cap of " + std::to_string(kMaxHessianDim));
    }
    const double total_pairs = static_cast<double>(omega.size()) * static_cast<double>(omega_prime.size());
    if (opts.pair_subsample == 0 && total_pairs > kMaxHessianPairs) {
        throw std::invalid_argument("loss_hessian: more than 1e6 pairs; request a pair subsample");
    }

    const SampleTerms left = compute_sample_terms(weights, opts.a1, opts.a2, omega, false, true);
    const SampleTerms right = compute_sample_terms(weights, opts.a1, opts.a2, omega_prime, false, true);
    const Eigen::Index dim = weights.dim();
    const double sign = opts.flip_b_sign ? -1.0 : 1.0;

    HessianParts parts;
    Vector row_b;
    Vector col_b;
    double count = 0.0;
    if (opts.pair_subsample == 0) {
        const PairSide l{{omega.y.data(), static_cast<std::size_t>(omega.size())},
                         {left.theta.data(), static_cast<std::size_t>(left.theta.size())}};
        const PairSide r{{omega_prime.y.data(), static_cast<std::size_t>(omega_prime.size())},
                         {right.theta.data(), static_cast<std::size_t>(right.theta.size())}};
        const PairCurvature c = parallel::pair_curvature(l, r);
        count = c.pair_count;
        const Matrix& g = left.gradient;
        const Matrix& gp = right.gradient;
        const Matrix cross = g.transpose() * c.a * gp;
        parts.a_term = g.transpose() * as_vector(c.row_a).asDiagonal() * g +
                       gp.transpose() * as_vector(c.col_a).asDiagonal() * gp - cross - cross.transpose();
        row_b = as_vector(c.row_b);
        col_b = as_vector(c.col_b);
    } else {
        const PairList pairs =
            subsample_pairs(static_cast<std::size_t>(omega.size()), static_cast<std::size_t>(omega_prime.size()),
                            opts.pair_subsample, opts.subsample_seed);
        count = static_cast<double>(pairs.size());
        parts.a_term = Matrix::Zero(dim, dim);
        row_b = Vector::Zero(omega.size());
        col_b = Vector::Zero(omega_prime.size());
        Vector diff(dim);
        for (const auto& [k, l] : pairs) {
            const PairScalars s = pair_scalars(omega.y(k), omega_prime.y(l), left.theta(k), right.theta(l));
            diff = left.gradient.row(k).transpose() - right.gradient.row(l).transpose();
            parts.a_term.selfadjointView<Eigen::Lower>().rankUpdate(diff, s.a);
            row_b(k) += s.b;
            col_b(l) += s.b;
        }
        parts.a_term = parts.a_term.selfadjointView<Eigen::Lower>();
    }
    parts.a_term /= count;
    parts.b_term = (second_order_blocks(weights, opts, omega, left, sign * row_b) -
                    second_order_blocks(weights, opts, omega_prime, right, sign * col_b)) /
                   count;
    return parts;
}

Matrix loss_hessian(const WeightPair& weights, const SampleBatch& omega, const SampleBatch& omega_prime,
                    const LossOptions& opts) {
    return loss_hessian_parts(weights, omega, omega_prime, opts).total();
}

} // namespace nsmc
