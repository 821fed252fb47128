#pragma once

#include "pyranet/activation.hpp"
#include "pyranet/rng.hpp"
#include "pyranet/tensor.hpp"

#include <string>
#include <string_view>

namespace pyranet {

enum class LayerKind { corr3d, pool3d, norm, fc };

[[nodiscard]] std::string_view layer_kind_name(LayerKind kind);

struct LayerSpec {
    LayerKind kind = LayerKind::corr3d;
    LayerGeometry geom{};          // corr3d / pool3d only
    int sets = 1;                  // weight sets (corr3d)
    ActivationKind activation{};   // unused by norm
    int out_classes = 0;           // fc only

    static LayerSpec corr(LayerGeometry g, int sets, ActivationKind act) {
        return {LayerKind::corr3d, g, sets, act, 0};
    }
    static LayerSpec pool(LayerGeometry g, ActivationKind act) {
        return {LayerKind::pool3d, g, 0, act, 0};
    }
    static LayerSpec norm() { return {LayerKind::norm, {}, 0, ActivationKind::identity(), 0}; }
    static LayerSpec fc(int classes, ActivationKind act) {
        return {LayerKind::fc, {}, 0, act, classes};
    }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Output extent of a layer for a given input extent. Throws shape_error or
// geometry_error when the input does not admit the layer.
[[nodiscard]] Shape layer_output_shape(const LayerSpec& spec, const Shape& in);

// Learnable parameters of one layer.
//   corr3d: weights (W_in, H_in, D, S), one input-sized 3D matrix per set;
//           biases  (W_out, H_out, M_out, S), one per output neuron.
//   pool3d: weights (W_out, H_out, 1, 1), shared by every map and set;
//           biases  (1, 1, M_out, S), one per output map.
//   fc:     weights (C, I, 1, 1), element (row i, col c) is w[i, c];
//           biases  (C, 1, 1, 1).
//   norm:   empty.
template <typename T>
struct ParamSet {
    LayerKind kind = LayerKind::norm;
    Tensor<T> weights;
    Tensor<T> biases;

    [[nodiscard]] std::size_t count() const { return weights.size() + biases.size(); }

    template <typename U>
    [[nodiscard]] ParamSet<U> cast() const {
        return {kind, weights.template cast<U>(), biases.template cast<U>()};
    }

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

[[nodiscard]] Shape param_weight_shape(const LayerSpec& spec, const Shape& in, const Shape& out);
[[nodiscard]] Shape param_bias_shape(const LayerSpec& spec, const Shape& in, const Shape& out);

// Glorot-uniform half-width for the layer's weights. corr3d and pool3d use
// fan_in = fan_out = r * r * D; fc uses fan_in = I, fan_out = C.
[[nodiscard]] double init_bound(const LayerSpec& spec, const Shape& in, const Shape& out);

// Weights uniform in +-init_bound drawn in storage order, biases zero.
template <typename T>
[[nodiscard]] ParamSet<T> init_params(const LayerSpec& spec, const Shape& in, const Shape& out,
                                      Rng& rng);

}  // namespace pyranet
