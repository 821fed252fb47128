#include "pyranet/network.hpp"

#include <algorithm>

namespace pyranet {

std::vector<std::string> layer_names(const std::vector<LayerSpec>& specs) {
    std::vector<std::string> names;
    names.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        names.push_back(std::string(layer_kind_name(specs[i].kind)) + std::to_string(i + 1));
    }
    return names;
}

std::vector<Shape> chain_shapes(Shape input, const std::vector<LayerSpec>& specs) {
    const auto names = layer_names(specs);
    std::vector<Shape> shapes{input};
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].kind == LayerKind::fc && i + 1 != specs.size() &&
            specs[i + 1].kind != LayerKind::fc) {
            throw shape_error("layer " + names[i] + ": fc layers must form the tail of the chain");
        }
        try {
            specs[i].activation.validate();
            shapes.push_back(layer_output_shape(specs[i], shapes.back()));
        } catch (const std::invalid_argument& e) {
            throw shape_error("layer " + names[i] + " (input " + shapes.back().str() +
                              "): " + e.what());
        }
    }
    if (!specs.empty() && specs.back().kind != LayerKind::fc) {
        throw shape_error("layer " + names.back() + ": the chain must end in an fc layer");
    }
    return shapes;
}

std::size_t count_parameters(Shape input, const std::vector<LayerSpec>& specs) {
    const auto shapes = chain_shapes(input, specs);
    std::size_t total = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        total += param_weight_shape(specs[i], shapes[i], shapes[i + 1]).size();
        total += param_bias_shape(specs[i], shapes[i], shapes[i + 1]).size();
    }
    return total;
}

template <typename T>
NetworkModel<T> NetworkModel<T>::build(Shape input, const std::vector<LayerSpec>& specs, Rng& rng) {
    const auto shapes = chain_shapes(input, specs);
    const auto names = layer_names(specs);
    std::vector<Layer<T>> layers;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        layers.push_back({names[i], specs[i], init_params<T>(specs[i], shapes[i], shapes[i + 1], rng),
                          shapes[i], shapes[i + 1]});
    }
    NetworkModel m;
    m.input_ = input;
    m.layers_ = std::move(layers);
    return m;
}

template <typename T>
NetworkModel<T> NetworkModel<T>::from_layers(Shape input, std::vector<Layer<T>> layers) {
    std::vector<LayerSpec> specs;
    for (const auto& l : layers) specs.push_back(l.spec);
    const auto shapes = chain_shapes(input, specs);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& l = layers[i];
        if (l.in_shape != shapes[i] || l.out_shape != shapes[i + 1]) {
            throw shape_error("layer " + l.name + ": recorded shapes do not chain");
        }
        if (l.params.kind != l.spec.kind && l.spec.kind != LayerKind::norm) {
            throw shape_error("layer " + l.name + ": parameter kind mismatch");
        }
        if (l.params.weights.shape() != param_weight_shape(l.spec, shapes[i], shapes[i + 1]) ||
            l.params.biases.shape() != param_bias_shape(l.spec, shapes[i], shapes[i + 1])) {
            throw shape_error("layer " + l.name + ": parameter shapes do not match geometry");
        }
    }
    NetworkModel m;
    m.input_ = input;
    m.layers_ = std::move(layers);
    return m;
}

template <typename T>
int NetworkModel<T>::classes() const {
    return layers_.empty() ? 0 : layers_.back().spec.out_classes;
}

template <typename T>
std::vector<LayerSpec> NetworkModel<T>::specs() const {
    std::vector<LayerSpec> s;
    for (const auto& l : layers_) s.push_back(l.spec);
    return s;
}

template <typename T>
int NetworkModel<T>::last_norm_index() const {
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
        if (layers_[i].spec.kind == LayerKind::norm) return i;
    }
    return -1;
}

template <typename T>
std::size_t NetworkModel<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.params.count();
    return n;
}

NetworkPreset make_preset(const std::string& name, int classes, ActivationKind hidden) {
    Shape input;
    LayerGeometry corr1{4, 3, 3, 1};
    LayerGeometry pool{2, 0, 3, 1};
    LayerGeometry corr5{4, 3, 3, 1};
    if (name == "ar") {
        input = {64, 48, 13, 1};
    } else if (name == "dsr") {
        input = {80, 100, 13, 1};
    } else if (name == "tiny") {
        input = {16, 12, 13, 1};
        corr5 = {3, 2, 3, 1};
    } else {
        throw std::invalid_argument("unknown preset '" + name + "' (expected ar, dsr or tiny)");
    }
    return {name,
            input,
            {LayerSpec::corr(corr1, 3, hidden), LayerSpec::norm(), LayerSpec::pool(pool, hidden),
             LayerSpec::norm(), LayerSpec::corr(corr5, 3, hidden), LayerSpec::norm(),
             LayerSpec::fc(classes, ActivationKind::identity())}};
}

template <typename T>
ForwardCache<T> forward(const NetworkModel<T>& model, const Tensor<T>& input) {
    if (input.shape() != model.input_shape()) {
        throw shape_error("input " + input.shape().str() + " does not match model input " +
                          model.input_shape().str());
    }
    ForwardCache<T> cache;
    cache.input = input;
    cache.layers.resize(model.layers().size());
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
        const auto& layer = model.layers()[l];
        const Tensor<T>& x = cache.layer_input(l);
        auto& c = cache.layers[l];
        switch (layer.spec.kind) {
            case LayerKind::corr3d: {
                auto r = corr3d_forward(x, layer.params, layer.spec);
                c.preact = std::move(r.preact);
                c.out = std::move(r.out);
                break;
            }
            case LayerKind::pool3d: {
                auto r = pool3d_forward(x, layer.params, layer.spec);
                c.preact = std::move(r.preact);
                c.out = std::move(r.out);
                c.maxval = std::move(r.maxval);
                c.argmax = std::move(r.argmax);
                break;
            }
            case LayerKind::norm: {
                auto r = norm_forward(x);
                c.out = std::move(r.out);
                c.mean = std::move(r.mean);
                c.stddev = std::move(r.stddev);
                break;
            }
            case LayerKind::fc: {
                auto r = fc_forward<T>(x.values(), layer.params, layer.spec);
                c.preact = std::move(r.preact);
                c.out = std::move(r.out);
                break;
            }
        }
    }
    if (!cache.layers.empty()) cache.posteriors = softmax<T>(cache.scores().values());
    return cache;
}

template <typename T>
std::vector<ForwardCache<T>> forward_full(const NetworkModel<T>& model,
                                          const std::vector<Clip>& clips) {
    std::vector<ForwardCache<T>> out;
    out.reserve(clips.size());
    for (const auto& clip : clips) out.push_back(forward(model, clip.to_tensor<T>()));
    return out;
}

template <typename T>
int predict(const NetworkModel<T>& model, const Clip& clip) {
    const auto cache = forward(model, clip.to_tensor<T>());
    return argmax_first(std::span<const T>(cache.posteriors));
}

int argmax_first(std::span<const float> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}
int argmax_first(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

template class NetworkModel<float>;
template class NetworkModel<double>;
template ForwardCache<float> forward(const NetworkModel<float>&, const Tensor<float>&);
template ForwardCache<double> forward(const NetworkModel<double>&, const Tensor<double>&);
template std::vector<ForwardCache<float>> forward_full(const NetworkModel<float>&,
                                                       const std::vector<Clip>&);
template std::vector<ForwardCache<double>> forward_full(const NetworkModel<double>&,
                                                        const std::vector<Clip>&);
template int predict(const NetworkModel<float>&, const Clip&);
template int predict(const NetworkModel<double>&, const Clip&);

}  // namespace pyranet
