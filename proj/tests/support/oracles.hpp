#pragma once

// Brute-force reference implementations used as test oracles. They share no
// code with the library beyond the plain activation formulas.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nsmc/datagen.hpp"
#include "nsmc/model.hpp"

namespace oracle {

using nsmc::ActivationKind;
using nsmc::Matrix;
using nsmc::SampleBatch;
using nsmc::Vector;
using nsmc::WeightPair;

inline double act(ActivationKind k, double x) {
    switch (k) {
    case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::Identity: return x;
    }
    return x;
}

// Theta by explicit loops over coordinates.
inline double theta(const WeightPair& w, ActivationKind a1, ActivationKind a2, const Vector& x, const Vector& z) {
    double s = 0.0;
    for (Eigen::Index p = 0; p < w.u.cols(); ++p) {
        double ux = 0.0, vz = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) ux += w.u(i, p) * x(i);
        for (Eigen::Index j = 0; j < z.size(); ++j) vz += w.v(j, p) * z(j);
        s += act(a1, ux) * act(a2, vz);
    }
    return s;
}

inline double theta_row(const WeightPair& w, ActivationKind a1, ActivationKind a2, const SampleBatch& b,
                        Eigen::Index k) {
    return oracle::theta(w, a1, a2, Vector(b.x.row(k).transpose()), Vector(b.z.row(k).transpose()));
}

// log(1 + e^t) in long double.
inline long double softplus(long double t) {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// Pseudo-likelihood by the double loop over all m m' pairs.
inline double pair_loss(const WeightPair& w, ActivationKind a1, ActivationKind a2, const SampleBatch& om,
                        const SampleBatch& op) {
    long double s = 0.0L;
    for (Eigen::Index k = 0; k < om.size(); ++k) {
        const double tk = theta_row(w, a1, a2, om, k);
        for (Eigen::Index l = 0; l < op.size(); ++l) {
            const double tl = theta_row(w, a1, a2, op, l);
            s += softplus(-static_cast<long double>(om.y(k) - op.y(l)) * (tk - tl));
        }
    }
    return static_cast<double>(s / (static_cast<long double>(om.size()) * op.size()));
}

inline double squared_loss(const WeightPair& w, ActivationKind a1, ActivationKind a2, const SampleBatch& b) {
    long double s = 0.0L;
    for (Eigen::Index k = 0; k < b.size(); ++k) {
        const long double r = b.y(k) - theta_row(w, a1, a2, b, k);
        s += r * r;
    }
    return static_cast<double>(s / b.size());
}

// Pairwise disagreement by enumerating every pair.
inline double clustering_error(const std::vector<int>& pred, const std::vector<int>& truth) {
    const std::size_t n = pred.size();
    std::size_t bad = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if ((truth[i] == truth[j]) != (pred[i] == pred[j])) ++bad;
        }
    }
    return 2.0 * static_cast<double>(bad) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double rel_error_matrix(const Matrix& est, const Matrix& truth) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        for (Eigen::Index j = 0; j < truth.cols(); ++j) {
            num += (est(i, j) - truth(i, j)) * (est(i, j) - truth(i, j));
            den += truth(i, j) * truth(i, j);
        }
    }
    return std::sqrt(num / den);
}

inline Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
    }
    return m;
}

inline SampleBatch random_batch(Eigen::Index m, Eigen::Index d1, Eigen::Index d2, std::mt19937_64& rng) {
    SampleBatch b;
    b.x = gaussian(m, d1, rng);
    b.z = gaussian(m, d2, rng);
    b.y = gaussian(m, 1, rng);
    return b;
}

inline WeightPair random_weights(Eigen::Index d1, Eigen::Index d2, Eigen::Index r, std::mt19937_64& rng) {
    return WeightPair(gaussian(d1, r, rng, 0.7), gaussian(d2, r, rng, 0.7));
}

// Central differences of a scalar function of the stacked parameters.
template <class F>
Vector fd_gradient(const F& f, const WeightPair& w, double h = 1e-5) {
    const Vector flat = w.flatten();
    Vector g(flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        Vector p = flat, q = flat;
        p(i) += h;
        q(i) -= h;
        g(i) = (f(WeightPair::unflatten(p, w.d1(), w.d2(), w.rank())) -
                f(WeightPair::unflatten(q, w.d1(), w.d2(), w.rank()))) /
               (2.0 * h);
    }
    return g;
}

} // namespace oracle
