#pragma once

#include <Eigen/Dense>

#include "nsmc/activations.hpp"

namespace nsmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Factor matrices U (d1 x r) and V (d2 x r). Column p of U is the weight
/// vector of the p-th embedding coordinate on the row side.
struct WeightPair {
    Matrix u;
    Matrix v;

    WeightPair() = default;
    WeightPair(Matrix u_, Matrix v_);

    [[nodiscard]] Eigen::Index d1() const { return u.rows(); }
    [[nodiscard]] Eigen::Index d2() const { return v.rows(); }
    [[nodiscard]] Eigen::Index rank() const { return u.cols(); }
    /// r * (d1 + d2): length of the stacked parameter vector.
    [[nodiscard]] Eigen::Index dim() const { return u.size() + v.size(); }

    [[nodiscard]] static WeightPair zeros_like(const WeightPair& shape);

    /// Stacked vector (u_1; ...; u_r; v_1; ...; v_r).
    [[nodiscard]] Vector flatten() const;
    [[nodiscard]] static WeightPair unflatten(const Vector& flat, Eigen::Index d1, Eigen::Index d2,
                                              Eigen::Index r);

    [[nodiscard]] double squared_norm() const { return u.squaredNorm() + v.squaredNorm(); }
    [[nodiscard]] bool all_finite() const { return u.allFinite() && v.allFinite(); }

    WeightPair& operator+=(const WeightPair& o);
    WeightPair& operator-=(const WeightPair& o);
    WeightPair& operator*=(double s);
};

WeightPair operator+(WeightPair a, const WeightPair& b);
WeightPair operator-(WeightPair a, const WeightPair& b);
WeightPair operator*(double s, WeightPair a);

/// Joint squared Frobenius distance ||U - U'||^2 + ||V - V'||^2.
double squared_distance(const WeightPair& a, const WeightPair& b);

/// Row features X (n1 x d1) and column features Z (n2 x d2).
struct FeaturePool {
    Matrix x;
    Matrix z;
};

/// phi(W^T feature), one entry per column of W.
Vector embed(const Matrix& w, ActivationKind kind, const Vector& feature);

/// Row i of the result is phi(W^T x_i) for row i of `features`.
Matrix embed_rows(const Matrix& w, ActivationKind kind, const Matrix& features);

/// <phi1(U^T x), phi2(V^T z)>.
double theta(const WeightPair& weights, ActivationKind a1, ActivationKind a2, const Vector& x,
             const Vector& z);

/// Singular values in decreasing order.
Vector singular_values(const Matrix& w);

/// W / sigma_r(W). Throws std::invalid_argument when sigma_r <= 1e-10 * sigma_1.
Matrix normalize_ground_truth(const Matrix& w);

} // namespace nsmc
