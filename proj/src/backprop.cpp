#include "pyranet/backprop.hpp"

#include <cmath>
#include <limits>

namespace pyranet {

void GradientSet::clear() {
    for (auto& t : weights) t.fill(0.0);
    for (auto& t : biases) t.fill(0.0);
}

void GradientSet::add(const GradientSet& other) {
    if (other.weights.size() != weights.size()) throw shape_error("GradientSet::add: layer count");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].shape() != other.weights[l].shape() ||
            biases[l].shape() != other.biases[l].shape()) {
            throw shape_error("GradientSet::add: shape mismatch at layer " + std::to_string(l));
        }
        for (std::size_t k = 0; k < weights[l].size(); ++k) weights[l][k] += other.weights[l][k];
        for (std::size_t k = 0; k < biases[l].size(); ++k) biases[l][k] += other.biases[l][k];
    }
}

bool GradientSet::all_finite() const {
    for (const auto& t : weights)
        if (!pyranet::all_finite(t)) return false;
    for (const auto& t : biases)
        if (!pyranet::all_finite(t)) return false;
    return true;
}

template <typename T>
std::vector<T> one_hot(int label, int classes) {
    if (label < 0 || label >= classes) {
        throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                                std::to_string(classes) + ")");
    }
    std::vector<T> t(classes, T(0));
    t[label] = T(1);
    return t;
}

template <typename T>
std::vector<T> output_delta(std::span<const T> posteriors, std::span<const T> outputs,
                            std::span<const T> preacts, std::span<const T> target, Loss loss,
                            const ActivationKind& out_activation) {
    const std::size_t n = target.size();
    if (outputs.size() != n || posteriors.size() != n || preacts.size() != n) {
        throw shape_error("output_delta: output length does not match target length");
    }
    std::vector<T> delta(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (loss == Loss::ce) {
            delta[c] = (posteriors[c] - target[c]) * activation_deriv(out_activation, preacts[c]);
        } else {
            delta[c] = (outputs[c] - target[c]) * activation_deriv(out_activation, preacts[c]);
        }
    }
    return delta;
}

template <typename T>
double loss_value(std::span<const T> posteriors, std::span<const T> outputs,
                  std::span<const T> target, Loss loss) {
    double total = 0.0;
    for (std::size_t c = 0; c < target.size(); ++c) {
        if (loss == Loss::ce) {
            if (target[c] != T(0)) {
                const double p = std::max(static_cast<double>(posteriors[c]),
                                          std::numeric_limits<double>::min());
                total -= static_cast<double>(target[c]) * std::log(p);
            }
        } else {
            const double e = static_cast<double>(outputs[c]) - static_cast<double>(target[c]);
            total += 0.5 * e * e;
        }
    }
    return total;
}

template <typename T>
Tensor<T> apply_activation_deriv(const Tensor<T>& grad_out, const Tensor<T>& preact,
                                 const ActivationKind& act) {
    if (grad_out.shape() != preact.shape()) {
        throw shape_error("apply_activation_deriv: gradient " + grad_out.shape().str() +
                          " vs pre-activation " + preact.shape().str());
    }
    Tensor<T> delta(grad_out.shape());
    for (std::size_t k = 0; k < delta.size(); ++k) {
        delta[k] = grad_out[k] * activation_deriv(act, preact[k]);
    }
    return delta;
}

// ---- fully connected -------------------------------------------------------

template <typename T>
std::vector<T> fc_backward_input(std::span<const T> delta, const ParamSet<T>& p) {
    const int classes = p.weights.shape().width;
    const int inputs = p.weights.shape().height;
    if (static_cast<int>(delta.size()) != classes) {
        throw shape_error("fc_backward_input: delta length " + std::to_string(delta.size()) +
                          " vs " + std::to_string(classes) + " outputs");
    }
    std::vector<T> grad(inputs);
    const auto& w = p.weights.raw();
#pragma omp parallel for schedule(static) if (inputs > 4096)
    for (int i = 0; i < inputs; ++i) {
        double acc = 0.0;
        const T* wrow = &w[static_cast<std::size_t>(i) * classes];
        for (int c = 0; c < classes; ++c) acc += static_cast<double>(delta[c]) * wrow[c];
        grad[i] = static_cast<T>(acc);
    }
    return grad;
}

template <typename T>
std::vector<T> fc_delta(std::span<const T> upper_delta, const ParamSet<T>& upper,
                        std::span<const T> preact, const ActivationKind& act) {
    auto grad = fc_backward_input(upper_delta, upper);
    if (grad.size() != preact.size()) throw shape_error("fc_delta: pre-activation length");
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] *= activation_deriv(act, preact[k]);
    return grad;
}

template <typename T>
void fc_weight_grad(std::span<const T> delta, std::span<const T> input, Tensor<double>& grad_w) {
    const int classes = grad_w.shape().width;
    const int inputs = grad_w.shape().height;
    if (static_cast<int>(delta.size()) != classes || static_cast<int>(input.size()) != inputs) {
        throw shape_error("fc_weight_grad: shapes do not chain");
    }
    auto& g = grad_w.raw();
#pragma omp parallel for schedule(static) if (inputs > 4096)
    for (int i = 0; i < inputs; ++i) {
        const double xi = static_cast<double>(input[i]);
        double* grow = &g[static_cast<std::size_t>(i) * classes];
        for (int c = 0; c < classes; ++c) grow[c] += static_cast<double>(delta[c]) * xi;
    }
}

template <typename T>
void fc_bias_grad(std::span<const T> delta, Tensor<double>& grad_b) {
    if (delta.size() != grad_b.size()) throw shape_error("fc_bias_grad: length mismatch");
    for (std::size_t c = 0; c < delta.size(); ++c) grad_b[c] += static_cast<double>(delta[c]);
}

// ---- 3D correlation --------------------------------------------------------

namespace {

// window_sum[i, j, z, s] = sum over outputs (u, v) whose spatial window holds
// input position (i, j) of delta[u, v, z, s]. Both the weight gradient and the
// input adjoint are this sum scaled by the element they pair with.
template <typename T>
Tensor<double> adjoint_window_sum(const Tensor<T>& delta, const LayerGeometry& geom, int in_rows,
                                  int in_cols) {
    const Shape ds = delta.shape();
    Tensor<double> sums(Shape{in_cols, in_rows, ds.maps, ds.sets});
    const int planes = ds.maps * ds.sets;
    const int r = geom.rf;
    const int g = geom.stride();
#pragma omp parallel for collapse(2) schedule(static)
    for (int plane = 0; plane < planes; ++plane) {
        for (int i = 0; i < in_rows; ++i) {
            const int s = plane / ds.maps;
            const int z = plane % ds.maps;
            const IndexRange ur = adjoint_range(i + 1, r, g, ds.height);
            for (int j = 0; j < in_cols; ++j) {
                const IndexRange vr = adjoint_range(j + 1, r, g, ds.width);
                double acc = 0.0;
                for (int u = ur.lo; u <= ur.hi; ++u) {
                    for (int v = vr.lo; v <= vr.hi; ++v) {
                        acc += static_cast<double>(delta(u - 1, v - 1, z, s));
                    }
                }
                sums(i, j, z, s) = acc;
            }
        }
    }
    return sums;
}

void check_corr_delta(const Shape& delta, const LayerSpec& spec, const Shape& in) {
    const Shape expect = layer_output_shape(spec, in);
    if (delta != expect) {
        throw shape_error("corr3d backward: delta " + delta.str() + " does not match output " +
                          expect.str());
    }
}

}  // namespace

template <typename T>
Tensor<T> corr3d_backward_input(const Tensor<T>& delta, const ParamSet<T>& p,
                                const LayerSpec& spec, const Shape& in_shape) {
    check_corr_delta(delta.shape(), spec, in_shape);
    const Shape ds = delta.shape();
    const auto sums = adjoint_window_sum(delta, spec.geom, in_shape.height, in_shape.width);
    const int D = spec.geom.depth;
    const int G = spec.geom.temporal_stride;
    Tensor<T> grad(in_shape);
    const int planes = in_shape.maps * in_shape.sets;
#pragma omp parallel for collapse(2) schedule(static)
    for (int plane = 0; plane < planes; ++plane) {
        for (int i = 0; i < in_shape.height; ++i) {
            const int s_in = plane / in_shape.maps;
            const int m = plane % in_shape.maps;
            const IndexRange zr = adjoint_range(m + 1, D, G, ds.maps);
            const int s_lo = in_shape.sets == 1 ? 0 : s_in;
            const int s_hi = in_shape.sets == 1 ? ds.sets - 1 : s_in;
            for (int j = 0; j < in_shape.width; ++j) {
                double acc = 0.0;
                for (int s = s_lo; s <= s_hi; ++s) {
                    for (int z = zr.lo - 1; z <= zr.hi - 1; ++z) {
                        const int d = m - z * G;
                        acc += static_cast<double>(p.weights(i, j, d, s)) * sums(i, j, z, s);
                    }
                }
                grad(i, j, m, s_in) = static_cast<T>(acc);
            }
        }
    }
    return grad;
}

template <typename T>
Tensor<T> corr_delta(const Tensor<T>& upper_delta, const ParamSet<T>& upper,
                     const LayerSpec& upper_spec, const Tensor<T>& preact,
                     const ActivationKind& act) {
    return apply_activation_deriv(
        corr3d_backward_input(upper_delta, upper, upper_spec, preact.shape()), preact, act);
}

template <typename T>
void corr3d_weight_grad(const Tensor<T>& delta, const Tensor<T>& input, const LayerSpec& spec,
                        Tensor<double>& grad_w) {
    const Shape in = input.shape();
    check_corr_delta(delta.shape(), spec, in);
    if (grad_w.shape() != Shape{in.width, in.height, spec.geom.depth, spec.sets}) {
        throw shape_error("corr3d_weight_grad: gradient shape " + grad_w.shape().str());
    }
    const Shape ds = delta.shape();
    const auto sums = adjoint_window_sum(delta, spec.geom, in.height, in.width);
    const int G = spec.geom.temporal_stride;
    const int planes = spec.geom.depth * spec.sets;
#pragma omp parallel for collapse(2) schedule(static)
    for (int plane = 0; plane < planes; ++plane) {
        for (int i = 0; i < in.height; ++i) {
            const int s = plane / spec.geom.depth;
            const int d = plane % spec.geom.depth;
            const int s_in = in.sets == 1 ? 0 : s;
            for (int j = 0; j < in.width; ++j) {
                double acc = 0.0;
                for (int z = 0; z < ds.maps; ++z) {
                    acc += static_cast<double>(input(i, j, z * G + d, s_in)) * sums(i, j, z, s);
                }
                grad_w(i, j, d, s) += acc;
            }
        }
    }
}

template <typename T>
void corr3d_bias_grad(const Tensor<T>& delta, Tensor<double>& grad_b) {
    if (delta.shape() != grad_b.shape()) throw shape_error("corr3d_bias_grad: shape mismatch");
    for (std::size_t k = 0; k < delta.size(); ++k) grad_b[k] += static_cast<double>(delta[k]);
}

// ---- weighted temporal max pooling -----------------------------------------

template <typename T>
Tensor<T> pool3d_backward_input(const Tensor<T>& delta, const ParamSet<T>& p,
                                const ArgmaxIndex& argmax) {
    if (argmax.flat.size() != delta.size() || argmax.output != delta.shape()) {
        throw shape_error("pool3d_backward_input: argmax cache does not match delta " +
                          delta.shape().str());
    }
    const Shape ds = delta.shape();
    if (p.weights.shape() != Shape{ds.width, ds.height, 1, 1}) {
        throw shape_error("pool3d_backward_input: pool weights do not match delta");
    }
    Tensor<T> grad(argmax.input);
    for (int s = 0; s < ds.sets; ++s) {
        for (int z = 0; z < ds.maps; ++z) {
            for (int u = 0; u < ds.height; ++u) {
                for (int v = 0; v < ds.width; ++v) {
                    const std::size_t o = delta.index(u, v, z, s);
                    const std::size_t src = argmax.flat[o];
                    if (src >= grad.size()) throw shape_error("pool3d_backward_input: stale argmax");
                    grad[src] = static_cast<T>(static_cast<double>(grad[src]) +
                                               static_cast<double>(delta[o]) *
                                                   static_cast<double>(p.weights(u, v, 0, 0)));
                }
            }
        }
    }
    return grad;
}

template <typename T>
Tensor<T> pool_delta(const Tensor<T>& pool_delta_out, const ParamSet<T>& pool,
                     const ArgmaxIndex& argmax, const Tensor<T>& lower_preact,
                     const ActivationKind& lower_act) {
    return apply_activation_deriv(pool3d_backward_input(pool_delta_out, pool, argmax),
                                  lower_preact, lower_act);
}

template <typename T>
void pool3d_weight_grad(const Tensor<T>& delta, const Tensor<T>& maxval, Tensor<double>& grad_w) {
    const Shape ds = delta.shape();
    if (maxval.shape() != ds) throw shape_error("pool3d_weight_grad: max-value cache mismatch");
    if (grad_w.shape() != Shape{ds.width, ds.height, 1, 1}) {
        throw shape_error("pool3d_weight_grad: gradient shape " + grad_w.shape().str());
    }
    for (int u = 0; u < ds.height; ++u) {
        for (int v = 0; v < ds.width; ++v) {
            double acc = 0.0;
            for (int s = 0; s < ds.sets; ++s) {
                for (int z = 0; z < ds.maps; ++z) {
                    acc += static_cast<double>(delta(u, v, z, s)) *
                           static_cast<double>(maxval(u, v, z, s));
                }
            }
            grad_w(u, v, 0, 0) += acc;
        }
    }
}

template <typename T>
void pool3d_bias_grad(const Tensor<T>& delta, Tensor<double>& grad_b) {
    const Shape ds = delta.shape();
    if (grad_b.shape() != Shape{1, 1, ds.maps, ds.sets}) {
        throw shape_error("pool3d_bias_grad: gradient shape " + grad_b.shape().str());
    }
    for (int s = 0; s < ds.sets; ++s) {
        for (int z = 0; z < ds.maps; ++z) {
            double acc = 0.0;
            for (const T d : delta.plane(z, s)) acc += static_cast<double>(d);
            grad_b(0, 0, z, s) += acc;
        }
    }
}

// ---- normalization ---------------------------------------------------------

template <typename T>
Tensor<T> norm_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                        std::span<const double> mean, std::span<const double> stddev,
                        NormGrad mode) {
    const Shape sh = grad_out.shape();
    const auto planes = static_cast<std::size_t>(sh.maps) * sh.sets;
    if (input.shape() != sh || mean.size() != planes || stddev.size() != planes) {
        throw shape_error("norm_backward: missing or mismatched forward cache");
    }
    Tensor<T> grad(sh);
    const double n = static_cast<double>(sh.map_size());
#pragma omp parallel for schedule(static)
    for (int plane = 0; plane < static_cast<int>(planes); ++plane) {
        const int s = plane / sh.maps;
        const int m = plane % sh.maps;
        const auto g = grad_out.plane(m, s);
        const auto x = input.plane(m, s);
        auto dx = grad.plane(m, s);
        const double mu = mean[plane];
        const double sd = stddev[plane];
        const double a = 1.0 / (sd + kNormEpsilon);
        if (mode == NormGrad::stop_gradient) {
            for (std::size_t k = 0; k < g.size(); ++k) dx[k] = static_cast<T>(g[k] * a);
            continue;
        }
        double g_mean = 0.0;
        double g_dot_c = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            g_mean += g[k];
            g_dot_c += static_cast<double>(g[k]) * (static_cast<double>(x[k]) - mu);
        }
        g_mean /= n;
        const double coupling = sd > 0.0 ? a * a * g_dot_c / (n * sd) : 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double c = static_cast<double>(x[k]) - mu;
            dx[k] = static_cast<T>(a * (static_cast<double>(g[k]) - g_mean) - coupling * c);
        }
    }
    return grad;
}

// ---- whole network ---------------------------------------------------------

template <typename T>
double backward(const NetworkModel<T>& model, const ForwardCache<T>& cache,
                std::span<const T> target, const BackwardOptions& opts, GradientSet& grads) {
    const auto& layers = model.layers();
    if (layers.empty()) throw shape_error("backward: empty model");
    if (cache.layers.size() != layers.size()) throw shape_error("backward: stale forward cache");
    if (grads.weights.size() != layers.size()) throw shape_error("backward: gradient set mismatch");

    const auto& head = cache.layers.back();
    const std::span<const T> post(cache.posteriors);
    const double loss = loss_value<T>(post, head.out.values(), target, opts.loss);
    auto out_delta = output_delta<T>(post, head.out.values(), head.preact.values(), target,
                                     opts.loss, layers.back().spec.activation);

    Tensor<T> grad_y;  // dL/dy of the current layer's output
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const auto& layer = layers[l];
        const auto& c = cache.layers[l];
        const Tensor<T>& x = cache.layer_input(l);
        const bool need_input = l > 0;

        if (layer.spec.kind == LayerKind::norm) {
            grad_y = norm_backward(grad_y, x, c.mean, c.stddev, opts.norm);
            continue;
        }

        Tensor<T> delta = (l + 1 == static_cast<int>(layers.size()))
                              ? Tensor<T>(c.preact.shape(), std::move(out_delta))
                              : apply_activation_deriv(grad_y, c.preact, layer.spec.activation);
        switch (layer.spec.kind) {
            case LayerKind::fc: {
                fc_weight_grad<T>(delta.values(), x.values(), grads.weights[l]);
                fc_bias_grad<T>(delta.values(), grads.biases[l]);
                if (need_input) {
                    grad_y = Tensor<T>(x.shape(), fc_backward_input<T>(delta.values(), layer.params));
                }
                break;
            }
            case LayerKind::corr3d: {
                corr3d_weight_grad(delta, x, layer.spec, grads.weights[l]);
                corr3d_bias_grad(delta, grads.biases[l]);
                if (need_input) grad_y = corr3d_backward_input(delta, layer.params, layer.spec, x.shape());
                break;
            }
            case LayerKind::pool3d: {
                pool3d_weight_grad(delta, c.maxval, grads.weights[l]);
                pool3d_bias_grad(delta, grads.biases[l]);
                if (need_input) grad_y = pool3d_backward_input(delta, layer.params, c.argmax);
                break;
            }
            case LayerKind::norm: break;
        }
    }
    return loss;
}

template <typename T>
void sgd_update(NetworkModel<T>& model, const GradientSet& grads, double lr) {
    auto& layers = model.layers();
    if (grads.weights.size() != layers.size()) throw shape_error("sgd_update: layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& p = layers[l].params;
        if (p.weights.shape() != grads.weights[l].shape() ||
            p.biases.shape() != grads.biases[l].shape()) {
            throw shape_error("sgd_update: gradient shape mismatch at " + layers[l].name);
        }
        for (std::size_t k = 0; k < p.weights.size(); ++k) {
            p.weights[k] = static_cast<T>(static_cast<double>(p.weights[k]) - lr * grads.weights[l][k]);
        }
        for (std::size_t k = 0; k < p.biases.size(); ++k) {
            p.biases[k] = static_cast<T>(static_cast<double>(p.biases[k]) - lr * grads.biases[l][k]);
        }
    }
}

#define PYRANET_INSTANTIATE(T)                                                                    \
    template std::vector<T> one_hot<T>(int, int);                                                \
    template std::vector<T> output_delta(std::span<const T>, std::span<const T>,                 \
                                         std::span<const T>, std::span<const T>, Loss,           \
                                         const ActivationKind&);                                 \
    template double loss_value(std::span<const T>, std::span<const T>, std::span<const T>, Loss); \
    template Tensor<T> apply_activation_deriv(const Tensor<T>&, const Tensor<T>&,                \
                                              const ActivationKind&);                            \
    template std::vector<T> fc_backward_input(std::span<const T>, const ParamSet<T>&);           \
    template std::vector<T> fc_delta(std::span<const T>, const ParamSet<T>&, std::span<const T>, \
                                     const ActivationKind&);                                     \
    template void fc_weight_grad(std::span<const T>, std::span<const T>, Tensor<double>&);       \
    template void fc_bias_grad(std::span<const T>, Tensor<double>&);                             \
    template Tensor<T> corr3d_backward_input(const Tensor<T>&, const ParamSet<T>&,               \
                                             const LayerSpec&, const Shape&);                    \
    template Tensor<T> corr_delta(const Tensor<T>&, const ParamSet<T>&, const LayerSpec&,        \
                                  const Tensor<T>&, const ActivationKind&);                      \
    template void corr3d_weight_grad(const Tensor<T>&, const Tensor<T>&, const LayerSpec&,       \
                                     Tensor<double>&);                                           \
    template void corr3d_bias_grad(const Tensor<T>&, Tensor<double>&);                           \
    template Tensor<T> pool3d_backward_input(const Tensor<T>&, const ParamSet<T>&,               \
                                             const ArgmaxIndex&);                                \
    template Tensor<T> pool_delta(const Tensor<T>&, const ParamSet<T>&, const ArgmaxIndex&,      \
                                  const Tensor<T>&, const ActivationKind&);                      \
    template void pool3d_weight_grad(const Tensor<T>&, const Tensor<T>&, Tensor<double>&);       \
    template void pool3d_bias_grad(const Tensor<T>&, Tensor<double>&);                           \
    template Tensor<T> norm_backward(const Tensor<T>&, const Tensor<T>&,                         \
                                     std::span<const double>, std::span<const double>, NormGrad); \
    template double backward(const NetworkModel<T>&, const ForwardCache<T>&, std::span<const T>, \
                             const BackwardOptions&, GradientSet&);                              \
    template void sgd_update(NetworkModel<T>&, const GradientSet&, double);

PYRANET_INSTANTIATE(float)
PYRANET_INSTANTIATE(double)

}  // namespace pyranet
