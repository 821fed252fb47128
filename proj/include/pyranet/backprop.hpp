#pragma once

#include "pyranet/network.hpp"

#include <span>
#include <vector>

namespace pyranet {

enum class Loss { ce, mse };

// How error flows back through a normalization layer.
//   stop_gradient: mean and stddev are constants, dx = dy / (stddev + eps).
//   exact:         full derivative including the mean and stddev terms.
enum class NormGrad { stop_gradient, exact };

// Weight and bias gradients shaped like the model's parameters. Sums over a
// batch accumulate in double.
struct GradientSet {
    std::vector<Tensor<double>> weights;
    std::vector<Tensor<double>> biases;

    template <typename T>
    static GradientSet zeros_like(const NetworkModel<T>& model) {
        GradientSet g;
        for (const auto& l : model.layers()) {
            g.weights.emplace_back(l.params.weights.shape());
            g.biases.emplace_back(l.params.biases.shape());
        }
        return g;
    }
    void clear();
    void add(const GradientSet& other);
    [[nodiscard]] bool all_finite() const;
};

// One-hot target for `label` among `classes`.
template <typename T>
[[nodiscard]] std::vector<T> one_hot(int label, int classes);

// Sensitivity at the output pre-activations.
//   ce:  delta = (softmax(y) - t) * f'(S), f' = 1 for the identity head
//   mse: delta = (y - t) * f'(S)
template <typename T>
[[nodiscard]] std::vector<T> output_delta(std::span<const T> posteriors, std::span<const T> outputs,
                                          std::span<const T> preacts, std::span<const T> target,
                                          Loss loss, const ActivationKind& out_activation);

template <typename T>
[[nodiscard]] double loss_value(std::span<const T> posteriors, std::span<const T> outputs,
                                std::span<const T> target, Loss loss);

// dL/dy -> delta = dL/dy * f'(S), elementwise.
template <typename T>
[[nodiscard]] Tensor<T> apply_activation_deriv(const Tensor<T>& grad_out, const Tensor<T>& preact,
                                               const ActivationKind& act);

// ---- fully connected -------------------------------------------------------

// dL/dx_i = sum_c delta_c w[i, c].
template <typename T>
[[nodiscard]] std::vector<T> fc_backward_input(std::span<const T> delta, const ParamSet<T>& p);

// fc_delta: f'(S_v) * sum_j delta_j w[v, j] for the layer beneath an fc layer
// whose own output is an fc or flattened stack with pre-activations `preact`.
template <typename T>
[[nodiscard]] std::vector<T> fc_delta(std::span<const T> upper_delta, const ParamSet<T>& upper,
                                      std::span<const T> preact, const ActivationKind& act);

// grad_w[i, c] += delta_c x_i;  grad_b[c] += delta_c.
template <typename T>
void fc_weight_grad(std::span<const T> delta, std::span<const T> input, Tensor<double>& grad_w);
template <typename T>
void fc_bias_grad(std::span<const T> delta, Tensor<double>& grad_b);

// ---- 3D correlation --------------------------------------------------------

// Exact adjoint of corr3d_forward with respect to its input. For input
// element (i, j, m) the contributing outputs are u in
// [ceil((i - r)/g) + 1, floor((i - 1)/g) + 1], v likewise, and z in
// [ceil((m - D)/G) + 1, floor((m - 1)/G) + 1], each clamped to the output
// extent (1-based), with kernel offset d = m - (z - 1)G.
template <typename T>
[[nodiscard]] Tensor<T> corr3d_backward_input(const Tensor<T>& delta, const ParamSet<T>& p,
                                              const LayerSpec& spec, const Shape& in_shape);

// corr_delta: f'(S) of the lower layer times the corr3d input adjoint.
template <typename T>
[[nodiscard]] Tensor<T> corr_delta(const Tensor<T>& upper_delta, const ParamSet<T>& upper,
                                   const LayerSpec& upper_spec, const Tensor<T>& preact,
                                   const ActivationKind& act);

// grad_w[i, j, d, s] += sum_z sum_(u,v) delta[u, v, z, s] x[i, j, (z-1)G + d]
// over the outputs whose window holds (i, j). grad_b += delta.
template <typename T>
void corr3d_weight_grad(const Tensor<T>& delta, const Tensor<T>& input, const LayerSpec& spec,
                        Tensor<double>& grad_w);
template <typename T>
void corr3d_bias_grad(const Tensor<T>& delta, Tensor<double>& grad_b);

// ---- weighted temporal max pooling -----------------------------------------

// Routes delta * w[u, v] to the recorded argmax of every output; every other
// input element receives exactly zero. Throws on a cache that does not belong
// to this delta.
template <typename T>
[[nodiscard]] Tensor<T> pool3d_backward_input(const Tensor<T>& delta, const ParamSet<T>& p,
                                              const ArgmaxIndex& argmax);

// pool_delta: f'(S) of the lower layer times the routed pool error.
template <typename T>
[[nodiscard]] Tensor<T> pool_delta(const Tensor<T>& pool_delta_out, const ParamSet<T>& pool,
                                   const ArgmaxIndex& argmax, const Tensor<T>& lower_preact,
                                   const ActivationKind& lower_act);

// grad_w[u, v] += sum_(z,s) delta[u, v, z, s] * maxval[u, v, z, s];
// grad_b[z, s] += sum_(u,v) delta[u, v, z, s].
template <typename T>
void pool3d_weight_grad(const Tensor<T>& delta, const Tensor<T>& maxval, Tensor<double>& grad_w);
template <typename T>
void pool3d_bias_grad(const Tensor<T>& delta, Tensor<double>& grad_b);

// ---- normalization ---------------------------------------------------------

template <typename T>
[[nodiscard]] Tensor<T> norm_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                      std::span<const double> mean, std::span<const double> stddev,
                                      NormGrad mode);

// ---- whole network ---------------------------------------------------------

struct BackwardOptions {
    Loss loss = Loss::ce;
    NormGrad norm = NormGrad::stop_gradient;
};

// Accumulates the gradients of one sample into `grads` and returns its loss.
template <typename T>
double backward(const NetworkModel<T>& model, const ForwardCache<T>& cache,
                std::span<const T> target, const BackwardOptions& opts, GradientSet& grads);

// Delta rule: w <- w - lr * dE/dw for every weight and bias.
template <typename T>
void sgd_update(NetworkModel<T>& model, const GradientSet& grads, double lr);

}  // namespace pyranet
