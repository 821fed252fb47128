#pragma once

#include "pyranet/params.hpp"

#include <span>
#include <vector>

namespace pyranet {

// Pre-activation weighted sums S and activations y = f(S) of one layer.
template <typename T>
struct LayerOutput {
    Tensor<T> preact;
    Tensor<T> out;
};

// Flat input index of the winning element for every pooling output, plus
// the shapes it was recorded against so a stale cache can be rejected.
struct ArgmaxIndex {
    Shape input{};
    Shape output{};
    std::vector<std::size_t> flat;
};

template <typename T>
struct PoolOutput {
    Tensor<T> preact;
    Tensor<T> out;
    Tensor<T> maxval;  // selected maximum per output neuron
    ArgmaxIndex argmax;
};

// Per (map, set) statistics; index = set * maps + map.
template <typename T>
struct NormOutput {
    Tensor<T> out;
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline constexpr double kNormEpsilon = 1e-8;

// Position-oriented 3D correlation. Output neuron (u, v, z) of set s reads the
// r x r x D input window and the weights of set s at those same input
// coordinates, so neighbours share a weight only where their windows overlap:
//   S = sum_d sum_(i,j) w_s[i, j, d] * x[i, j, zG + d] + b[u, v, z, s]
// The bias is added once per neuron. A single-set input is read by every
// weight set; otherwise set s reads input set s. Each sum is accumulated in
// double in (d, i, j) order and rounded once.
template <typename T>
[[nodiscard]] LayerOutput<T> corr3d_forward(const Tensor<T>& x, const ParamSet<T>& p,
                                            const LayerSpec& spec);

// Weighted temporal max pooling:
//   y[u, v, z, s] = f(w[u, v] * max over the r x r x D window + b[z, s]).
// Ties resolve to the first maximum scanning rows, then columns, then depth.
template <typename T>
[[nodiscard]] PoolOutput<T> pool3d_forward(const Tensor<T>& x, const ParamSet<T>& p,
                                           const LayerSpec& spec);

// Zero mean, unit (population) variance per map and set:
//   y = (x - mean) / (stddev + kNormEpsilon).
template <typename T>
[[nodiscard]] NormOutput<T> norm_forward(const Tensor<T>& x);

// score_c = f(sum_i w[i, c] x[i] + b[c]) over the flattened input.
template <typename T>
[[nodiscard]] LayerOutput<T> fc_forward(std::span<const T> x, const ParamSet<T>& p,
                                        const LayerSpec& spec);

template <typename T>
[[nodiscard]] std::vector<T> softmax(std::span<const T> scores);

template <typename T>
void activation_apply(const ActivationKind& kind, std::span<const T> preact, std::span<T> out);

}  // namespace pyranet
