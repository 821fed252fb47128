#include "pyranet/params.hpp"

#include <cmath>

namespace pyranet {

std::string_view layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::corr3d: return "3DCORR";
        case LayerKind::pool3d: return "3DPOOL";
        case LayerKind::norm: return "NORM";
        case LayerKind::fc: return "FC";
    }
    return "?";
}

void ActivationKind::validate() const {
    if (type == Activation::lrelu && !(slope > 0.0 && slope < 1.0)) {
        throw std::invalid_argument("lrelu slope must lie in (0, 1), got " + std::to_string(slope));
    }
}

std::string ActivationKind::name() const {
    switch (type) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::lrelu: return "lrelu";
    }
    return "?";
}

ActivationKind parse_activation(std::string_view text) {
    if (text == "identity" || text == "linear") return ActivationKind::identity();
    if (text == "sigmoid") return ActivationKind::sigmoid();
    if (text == "tanh") return ActivationKind::tanh();
    if (text == "lrelu") return ActivationKind::lrelu();
    throw std::invalid_argument("unknown activation '" + std::string(text) + "'");
}

Shape layer_output_shape(const LayerSpec& spec, const Shape& in) {
    switch (spec.kind) {
        case LayerKind::corr3d: {
            if (spec.sets < 1) throw shape_error("corr3d needs at least one weight set");
            if (in.sets != 1 && in.sets != spec.sets) {
                throw shape_error("corr3d with " + std::to_string(spec.sets) +
                                  " sets cannot consume an input with " + std::to_string(in.sets) +
                                  " sets");
            }
            return {output_shape(in.width, spec.geom), output_shape(in.height, spec.geom),
                    temporal_output_shape(in.maps, spec.geom), spec.sets};
        }
        case LayerKind::pool3d:
            return {output_shape(in.width, spec.geom), output_shape(in.height, spec.geom),
                    temporal_output_shape(in.maps, spec.geom), in.sets};
        case LayerKind::norm:
            if (in.map_size() < 2) throw shape_error("normalization needs >= 2 elements per map");
            return in;
        case LayerKind::fc:
            if (spec.out_classes < 1) throw shape_error("fc layer needs >= 1 output neuron");
            if (in.size() == 0) throw shape_error("fc layer has an empty input");
            return {spec.out_classes, 1, 1, 1};
    }
    throw shape_error("unknown layer kind");
}

Shape param_weight_shape(const LayerSpec& spec, const Shape& in, const Shape& out) {
    switch (spec.kind) {
        case LayerKind::corr3d: return {in.width, in.height, spec.geom.depth, spec.sets};
        case LayerKind::pool3d: return {out.width, out.height, 1, 1};
        case LayerKind::fc: return {spec.out_classes, static_cast<int>(in.size()), 1, 1};
        case LayerKind::norm: return {0, 0, 0, 0};
    }
    return {};
}

Shape param_bias_shape(const LayerSpec& spec, const Shape& /*in*/, const Shape& out) {
    switch (spec.kind) {
        case LayerKind::corr3d: return out;
        case LayerKind::pool3d: return {1, 1, out.maps, out.sets};
        case LayerKind::fc: return {spec.out_classes, 1, 1, 1};
        case LayerKind::norm: return {0, 0, 0, 0};
    }
    return {};
}

double init_bound(const LayerSpec& spec, const Shape& in, const Shape& /*out*/) {
    switch (spec.kind) {
        case LayerKind::corr3d:
        case LayerKind::pool3d: {
            const double fan = static_cast<double>(spec.geom.rf) * spec.geom.rf * spec.geom.depth;
            return std::sqrt(6.0 / (fan + fan));
        }
        case LayerKind::fc:
            return std::sqrt(6.0 / (static_cast<double>(in.size()) + spec.out_classes));
        case LayerKind::norm: return 0.0;
    }
    return 0.0;
}

template <typename T>
ParamSet<T> init_params(const LayerSpec& spec, const Shape& in, const Shape& out, Rng& rng) {
    ParamSet<T> p;
    p.kind = spec.kind;
    p.weights = Tensor<T>(param_weight_shape(spec, in, out));
    p.biases = Tensor<T>(param_bias_shape(spec, in, out));
    const double bound = init_bound(spec, in, out);
    for (T& w : p.weights.values()) w = static_cast<T>(rng.uniform(-bound, bound));
    return p;
}

template ParamSet<float> init_params(const LayerSpec&, const Shape&, const Shape&, Rng&);
template ParamSet<double> init_params(const LayerSpec&, const Shape&, const Shape&, Rng&);

}  // namespace pyranet
