#include "nsmc/activations.hpp"

#include <stdexcept>

namespace nsmc {

std::string to_string(ActivationKind kind) {
    switch (kind) {
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Identity: return "identity";
    }
    return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    if (name == "tanh") return ActivationKind::Tanh;
    if (name == "relu") return ActivationKind::ReLU;
    if (name == "identity") return ActivationKind::Identity;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

} // namespace nsmc
