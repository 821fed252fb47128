#pragma once

#include <cmath>
#include <string>
#include <string_view>

namespace pyranet {

enum class Activation { identity, sigmoid, tanh, lrelu };

struct ActivationKind {
    Activation type = Activation::identity;
    double slope = 0.01;  // lrelu only, in (0, 1)

    static ActivationKind identity() { return {Activation::identity, 0.0}; }
    static ActivationKind sigmoid() { return {Activation::sigmoid, 0.0}; }
    static ActivationKind tanh() { return {Activation::tanh, 0.0}; }
    static ActivationKind lrelu(double slope = 0.01) { return {Activation::lrelu, slope}; }

    void validate() const;
    [[nodiscard]] std::string name() const;

    friend bool operator==(const ActivationKind&, const ActivationKind&) = default;
};

[[nodiscard]] ActivationKind parse_activation(std::string_view text);

template <typename T>
[[nodiscard]] inline T activation_apply(const ActivationKind& kind, T x) {
    switch (kind.type) {
        case Activation::identity: return x;
        case Activation::sigmoid: return T(1) / (T(1) + std::exp(-x));
        case Activation::tanh: return std::tanh(x);
        case Activation::lrelu: return x > T(0) ? x : static_cast<T>(kind.slope) * x;
    }
    return x;
}

// Derivative with respect to the pre-activation. lrelu uses the slope at 0.
template <typename T>
[[nodiscard]] inline T activation_deriv(const ActivationKind& kind, T preact) {
    switch (kind.type) {
        case Activation::identity: return T(1);
        case Activation::sigmoid: {
            const T s = T(1) / (T(1) + std::exp(-preact));
            return s * (T(1) - s);
        }
        case Activation::tanh: {
            const T t = std::tanh(preact);
            return T(1) - t * t;
        }
        case Activation::lrelu: return preact > T(0) ? T(1) : static_cast<T>(kind.slope);
    }
    return T(1);
}

}  // namespace pyranet
