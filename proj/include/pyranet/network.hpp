#pragma once

#include "pyranet/layers.hpp"

#include <string>
#include <vector>

namespace pyranet {

template <typename T>
struct Layer {
    std::string name;  // e.g. "3DCORR1", "NORM2"
    LayerSpec spec;
    ParamSet<T> params;
    Shape in_shape;
    Shape out_shape;
};

// An ordered chain of layers ending in an fc layer whose scores feed a
// softmax. Construction validates that every layer admits its input.
template <typename T>
class NetworkModel {
public:
    NetworkModel() = default;

    // Builds the chain and initializes parameters from `rng`. A layer that
    // does not fit its input raises shape_error naming that layer.
    static NetworkModel build(Shape input, const std::vector<LayerSpec>& specs, Rng& rng);

    // Wraps existing parameters (e.g. from a checkpoint) after validation.
    static NetworkModel from_layers(Shape input, std::vector<Layer<T>> layers);

    [[nodiscard]] const Shape& input_shape() const { return input_; }
    [[nodiscard]] int classes() const;
    [[nodiscard]] const std::vector<Layer<T>>& layers() const { return layers_; }
    [[nodiscard]] std::vector<Layer<T>>& layers() { return layers_; }
    [[nodiscard]] std::vector<LayerSpec> specs() const;
    [[nodiscard]] bool empty() const { return layers_.empty(); }

    // Index of the last normalization layer, or -1.
    [[nodiscard]] int last_norm_index() const;

    [[nodiscard]] std::size_t parameter_count() const;

    template <typename U>
    [[nodiscard]] NetworkModel<U> cast() const {
        std::vector<Layer<U>> out;
        out.reserve(layers_.size());
        for (const auto& l : layers_) {
            out.push_back({l.name, l.spec, l.params.template cast<U>(), l.in_shape, l.out_shape});
        }
        return NetworkModel<U>::from_layers(input_, std::move(out));
    }

private:
    Shape input_{};
    std::vector<Layer<T>> layers_;
};

// Per-layer names: kind prefix plus 1-based position.
[[nodiscard]] std::vector<std::string> layer_names(const std::vector<LayerSpec>& specs);

// Shape chain for a spec list: the input followed by every layer's output
// (specs.size() + 1 entries). Throws shape_error naming the first layer that
// does not fit.
[[nodiscard]] std::vector<Shape> chain_shapes(Shape input, const std::vector<LayerSpec>& specs);

// Closed-form parameter count of a spec chain, without allocating it.
[[nodiscard]] std::size_t count_parameters(Shape input, const std::vector<LayerSpec>& specs);

struct NetworkPreset {
    std::string name;
    Shape input;
    std::vector<LayerSpec> specs;
};

// "ar"   64x48x13, 3DCORR1 r=4 O=3, 3DPOOL3 r=2 O=0, 3DCORR5 r=4 O=3.
// "dsr"  80x100x13, same geometry.
// "tiny" 16x12x13 for the synthetic task, 3DCORR5 r=3 O=2.
// Layer order: 3DCORR1 NORM2 3DPOOL3 NORM4 3DCORR5 NORM6 FC7, D=3, G=1,
// three weight sets, lrelu(0.01) hidden activations, identity fc head.
[[nodiscard]] NetworkPreset make_preset(const std::string& name, int classes,
                                        ActivationKind hidden = ActivationKind::lrelu(0.01));

// Everything a backward pass needs from one forward pass over one clip.
template <typename T>
struct LayerCache {
    Tensor<T> preact;  // corr3d, pool3d, fc
    Tensor<T> out;
    std::vector<double> mean, stddev;  // norm
    Tensor<T> maxval;                  // pool3d
    ArgmaxIndex argmax;                // pool3d
};

template <typename T>
struct ForwardCache {
    Tensor<T> input;
    std::vector<LayerCache<T>> layers;
    std::vector<T> posteriors;

    [[nodiscard]] const Tensor<T>& layer_input(std::size_t l) const {
        return l == 0 ? input : layers[l - 1].out;
    }
    [[nodiscard]] const Tensor<T>& scores() const { return layers.back().out; }
};

template <typename T>
[[nodiscard]] ForwardCache<T> forward(const NetworkModel<T>& model, const Tensor<T>& input);

template <typename T>
[[nodiscard]] std::vector<ForwardCache<T>> forward_full(const NetworkModel<T>& model,
                                                        const std::vector<Clip>& clips);

template <typename T>
[[nodiscard]] int predict(const NetworkModel<T>& model, const Clip& clip);

[[nodiscard]] int argmax_first(std::span<const float> v);
[[nodiscard]] int argmax_first(std::span<const double> v);

}  // namespace pyranet
