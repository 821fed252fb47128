#include "pyranet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pyranet {

namespace {

void require_finite(std::span<const float> v, const char* what) {
    for (const float x : v) {
        if (!std::isfinite(x)) throw shape_error(std::string(what) + ": non-finite input");
    }
}
void require_finite(std::span<const double> v, const char* what) {
    for (const double x : v) {
        if (!std::isfinite(x)) throw shape_error(std::string(what) + ": non-finite input");
    }
}

void require_kind(LayerKind have, LayerKind want, const char* what) {
    if (have != want) {
        throw shape_error(std::string(what) + ": parameter kind " +
                          std::string(layer_kind_name(have)) + " does not match layer");
    }
}

}  // namespace

template <typename T>
void activation_apply(const ActivationKind& kind, std::span<const T> preact, std::span<T> out) {
    const auto n = static_cast<std::ptrdiff_t>(preact.size());
#pragma omp parallel for schedule(static) if (n > 65536)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = activation_apply(kind, preact[i]);
}

template <typename T>
LayerOutput<T> corr3d_forward(const Tensor<T>& x, const ParamSet<T>& p, const LayerSpec& spec) {
    require_kind(p.kind, LayerKind::corr3d, "corr3d_forward");
    const Shape in = x.shape();
    const Shape out_shape = layer_output_shape(spec, in);
    if (p.weights.shape() != param_weight_shape(spec, in, out_shape) ||
        p.biases.shape() != param_bias_shape(spec, in, out_shape)) {
        throw shape_error("corr3d_forward: parameters " + p.weights.shape().str() + " / " +
                          p.biases.shape().str() + " do not fit input " + in.str());
    }
    require_finite(x.values(), "corr3d_forward");

    LayerOutput<T> res{Tensor<T>(out_shape), Tensor<T>(out_shape)};
    const int g = spec.geom.stride();
    const int r = spec.geom.rf;
    const int D = spec.geom.depth;
    const int G = spec.geom.temporal_stride;
    const int planes = out_shape.sets * out_shape.maps;

#pragma omp parallel for collapse(2) schedule(static)
    for (int plane = 0; plane < planes; ++plane) {
        for (int u = 0; u < out_shape.height; ++u) {
            const int s = plane / out_shape.maps;
            const int z = plane % out_shape.maps;
            const int s_in = in.sets == 1 ? 0 : s;
            for (int v = 0; v < out_shape.width; ++v) {
                double acc = 0.0;
                for (int d = 0; d < D; ++d) {
                    const int m = z * G + d;
                    for (int i = u * g; i < u * g + r; ++i) {
                        const T* wrow = &p.weights(i, 0, d, s);
                        const T* xrow = &x(i, 0, m, s_in);
                        for (int j = v * g; j < v * g + r; ++j) {
                            acc += static_cast<double>(wrow[j]) * static_cast<double>(xrow[j]);
                        }
                    }
                }
                acc += static_cast<double>(p.biases(u, v, z, s));
                const T sum = static_cast<T>(acc);
                res.preact(u, v, z, s) = sum;
                res.out(u, v, z, s) = activation_apply(spec.activation, sum);
            }
        }
    }
    return res;
}

template <typename T>
PoolOutput<T> pool3d_forward(const Tensor<T>& x, const ParamSet<T>& p, const LayerSpec& spec) {
    require_kind(p.kind, LayerKind::pool3d, "pool3d_forward");
    const Shape in = x.shape();
    const Shape out_shape = layer_output_shape(spec, in);
    if (p.weights.shape() != param_weight_shape(spec, in, out_shape) ||
        p.biases.shape() != param_bias_shape(spec, in, out_shape)) {
        throw shape_error("pool3d_forward: parameters do not fit input " + in.str());
    }
    require_finite(x.values(), "pool3d_forward");

    PoolOutput<T> res{Tensor<T>(out_shape), Tensor<T>(out_shape), Tensor<T>(out_shape),
                      ArgmaxIndex{in, out_shape, std::vector<std::size_t>(out_shape.size())}};
    const int g = spec.geom.stride();
    const int r = spec.geom.rf;
    const int D = spec.geom.depth;
    const int G = spec.geom.temporal_stride;
    const int planes = out_shape.sets * out_shape.maps;

#pragma omp parallel for collapse(2) schedule(static)
    for (int plane = 0; plane < planes; ++plane) {
        for (int u = 0; u < out_shape.height; ++u) {
            const int s = plane / out_shape.maps;
            const int z = plane % out_shape.maps;
            for (int v = 0; v < out_shape.width; ++v) {
                T best = -std::numeric_limits<T>::infinity();
                std::size_t best_idx = 0;
                for (int i = u * g; i < u * g + r; ++i) {
                    for (int j = v * g; j < v * g + r; ++j) {
                        for (int d = 0; d < D; ++d) {
                            const std::size_t idx = x.index(i, j, z * G + d, s);
                            if (x[idx] > best) {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                }
                const std::size_t o = res.out.index(u, v, z, s);
                const T sum = static_cast<T>(static_cast<double>(p.weights(u, v, 0, 0)) *
                                                 static_cast<double>(best) +
                                             static_cast<double>(p.biases(0, 0, z, s)));
                res.maxval[o] = best;
                res.argmax.flat[o] = best_idx;
                res.preact[o] = sum;
                res.out[o] = activation_apply(spec.activation, sum);
            }
        }
    }
    return res;
}

template <typename T>
NormOutput<T> norm_forward(const Tensor<T>& x) {
    const Shape sh = x.shape();
    if (sh.map_size() < 2) throw shape_error("norm_forward: each map needs >= 2 elements");
    const int planes = sh.maps * sh.sets;
    NormOutput<T> res{Tensor<T>(sh), std::vector<double>(planes), std::vector<double>(planes)};
    const auto n = static_cast<double>(sh.map_size());

#pragma omp parallel for schedule(static)
    for (int plane = 0; plane < planes; ++plane) {
        const int s = plane / sh.maps;
        const int m = plane % sh.maps;
        const auto src = x.plane(m, s);
        auto dst = res.out.plane(m, s);
        double mean = 0.0;
        for (const T v : src) mean += static_cast<double>(v);
        mean /= n;
        double var = 0.0;
        for (const T v : src) {
            const double c = static_cast<double>(v) - mean;
            var += c * c;
        }
        const double sd = std::sqrt(var / n);
        const double scale = 1.0 / (sd + kNormEpsilon);
        for (std::size_t k = 0; k < src.size(); ++k) {
            dst[k] = static_cast<T>((static_cast<double>(src[k]) - mean) * scale);
        }
        const int idx = s * sh.maps + m;
        res.mean[idx] = mean;
        res.stddev[idx] = sd;
    }
    return res;
}

template <typename T>
LayerOutput<T> fc_forward(std::span<const T> x, const ParamSet<T>& p, const LayerSpec& spec) {
    require_kind(p.kind, LayerKind::fc, "fc_forward");
    const int classes = spec.out_classes;
    if (p.weights.shape().height != static_cast<int>(x.size()) ||
        p.weights.shape().width != classes || p.biases.size() != static_cast<std::size_t>(classes)) {
        throw shape_error("fc_forward: input length " + std::to_string(x.size()) +
                          " does not match weights " + p.weights.shape().str());
    }
    require_finite(x, "fc_forward");
    const Shape out_shape{classes, 1, 1, 1};
    LayerOutput<T> res{Tensor<T>(out_shape), Tensor<T>(out_shape)};
    const auto& w = p.weights.raw();
    // Accumulate row by row so the weight matrix streams contiguously.
    std::vector<double> acc(classes, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = static_cast<double>(x[i]);
        const T* wrow = &w[i * classes];
        for (int c = 0; c < classes; ++c) acc[c] += static_cast<double>(wrow[c]) * xi;
    }
    for (int c = 0; c < classes; ++c) {
        const T sum = static_cast<T>(acc[c] + static_cast<double>(p.biases[c]));
        res.preact[c] = sum;
        res.out[c] = activation_apply(spec.activation, sum);
    }
    return res;
}

template <typename T>
std::vector<T> softmax(std::span<const T> scores) {
    std::vector<T> p(scores.size());
    if (scores.empty()) return p;
    const double mx = static_cast<double>(*std::max_element(scores.begin(), scores.end()));
    double total = 0.0;
    std::vector<double> e(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        e[i] = std::exp(static_cast<double>(scores[i]) - mx);
        total += e[i];
    }
    for (std::size_t i = 0; i < scores.size(); ++i) p[i] = static_cast<T>(e[i] / total);
    return p;
}

#define PYRANET_INSTANTIATE(T)                                                                  \
    template void activation_apply(const ActivationKind&, std::span<const T>, std::span<T>);  \
    template LayerOutput<T> corr3d_forward(const Tensor<T>&, const ParamSet<T>&,              \
                                           const LayerSpec&);                                  \
    template PoolOutput<T> pool3d_forward(const Tensor<T>&, const ParamSet<T>&,               \
                                          const LayerSpec&);                                   \
    template NormOutput<T> norm_forward(const Tensor<T>&);                                     \
    template LayerOutput<T> fc_forward(std::span<const T>, const ParamSet<T>&, const LayerSpec&); \
    template std::vector<T> softmax(std::span<const T>);

PYRANET_INSTANTIATE(float)
PYRANET_INSTANTIATE(double)

}  // namespace pyranet
