#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

namespace nsmc {

enum class ActivationKind { Sigmoid, Tanh, ReLU, Identity };

/// Numerically stable logistic function.
inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

namespace activation {

inline double eval(ActivationKind kind, double x) {
    switch (kind) {
    case ActivationKind::Sigmoid: return logistic(x);
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::Identity: return x;
    }
    return x;
}

// ReLU'(0) is taken to be 0.
inline double d1(ActivationKind kind, double x) {
    switch (kind) {
    case ActivationKind::Sigmoid: {
        const double s = logistic(x);
        return s * (1.0 - s);
    }
    case ActivationKind::Tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case ActivationKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Identity: return 1.0;
    }
    return 0.0;
}

inline double d2(ActivationKind kind, double x) {
    switch (kind) {
    case ActivationKind::Sigmoid: {
        const double s = logistic(x);
        return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case ActivationKind::Tanh: {
        const double t = std::tanh(x);
        return -2.0 * t * (1.0 - t * t);
    }
    case ActivationKind::ReLU:
    case ActivationKind::Identity: return 0.0;
    }
    return 0.0;
}

/// Smoothness flag: 1 for ReLU (non-smooth), 0 otherwise.
inline int smoothness_flag(ActivationKind kind) { return kind == ActivationKind::ReLU ? 1 : 0; }

} // namespace activation

/// Config-file name: "sigmoid" | "tanh" | "relu" | "identity".
std::string to_string(ActivationKind kind);

/// Throws std::invalid_argument on unknown names.
ActivationKind parse_activation(std::string_view name);

} // namespace nsmc
