#include "nsmc/model.hpp"

#include <stdexcept>
#include <string>

namespace nsmc {

WeightPair::WeightPair(Matrix u_, Matrix v_) : u(std::move(u_)), v(std::move(v_)) {
    if (u.cols() != v.cols()) {
        throw std::invalid_argument("WeightPair: U has " + std::to_string(u.cols()) +
                                    " columns but V has " + std::to_string(v.cols()));
    }
}

WeightPair WeightPair::zeros_like(const WeightPair& shape) {
    return {Matrix::Zero(shape.u.rows(), shape.u.cols()), Matrix::Zero(shape.v.rows(), shape.v.cols())};
}

Vector WeightPair::flatten() const {
    Vector flat(dim());
    flat.head(u.size()) = Eigen::Map<const Vector>(u.data(), u.size());
    flat.tail(v.size()) = Eigen::Map<const Vector>(v.data(), v.size());
    return flat;
}

WeightPair WeightPair::unflatten(const Vector& flat, Eigen::Index d1, Eigen::Index d2, Eigen::Index r) {
    if (flat.size() != r * (d1 + d2)) {
        throw std::invalid_argument("unflatten: vector length does not match r*(d1+d2)");
    }
    Matrix u = Eigen::Map<const Matrix>(flat.data(), d1, r);
    Matrix v = Eigen::Map<const Matrix>(flat.data() + d1 * r, d2, r);
    return {std::move(u), std::move(v)};
}

WeightPair& WeightPair::operator+=(const WeightPair& o) {
    u += o.u;
    v += o.v;
    return *this;
}

WeightPair& WeightPair::operator-=(const WeightPair& o) {
    u -= o.u;
    v -= o.v;
    return *this;
}

WeightPair& WeightPair::operator*=(double s) {
    u *= s;
    v *= s;
    return *this;
}

WeightPair operator+(WeightPair a, const WeightPair& b) { return a += b; }
WeightPair operator-(WeightPair a, const WeightPair& b) { return a -= b; }
WeightPair operator*(double s, WeightPair a) { return a *= s; }

double squared_distance(const WeightPair& a, const WeightPair& b) {
    return (a.u - b.u).squaredNorm() + (a.v - b.v).squaredNorm();
}

Vector embed(const Matrix& w, ActivationKind kind, const Vector& feature) {
    if (w.rows() != feature.size()) {
        throw std::invalid_argument("embed: weight has " + std::to_string(w.rows()) +
                                    " rows but feature has length " + std::to_string(feature.size()));
    }
    Vector pre = w.transpose() * feature;
    return pre.unaryExpr([kind](double t) { return activation::eval(kind, t); });
}

Matrix embed_rows(const Matrix& w, ActivationKind kind, const Matrix& features) {
    if (w.rows() != features.cols()) {
        throw std::invalid_argument("embed_rows: feature dimension mismatch");
    }
    Matrix pre = features * w;
    return pre.unaryExpr([kind](double t) { return activation::eval(kind, t); });
}

double theta(const WeightPair& weights, ActivationKind a1, ActivationKind a2, const Vector& x,
             const Vector& z) {
    return embed(weights.u, a1, x).dot(embed(weights.v, a2, z));
}

Vector singular_values(const Matrix& w) {
    Eigen::JacobiSVD<Matrix> svd(w);
    return svd.singularValues();
}

Matrix normalize_ground_truth(const Matrix& w) {
    if (w.size() == 0) {
        throw std::invalid_argument("normalize_ground_truth: empty matrix");
    }
    const Vector sv = singular_values(w);
    const double smallest = sv(sv.size() - 1);
    if (!(smallest > 1e-10 * sv(0))) {
        throw std::invalid_argument("normalize_ground_truth: matrix is rank deficient (sigma_r = " +
                                    std::to_string(smallest) + ")");
    }
    return w / smallest;
}

} // namespace nsmc
