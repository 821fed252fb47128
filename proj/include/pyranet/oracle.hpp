#pragma once

#include "pyranet/backprop.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

// Reference implementations written as direct loops over the documented
// formulas. Nothing here calls the production kernels; the suite compares the
// production backward pass against central differences of these forwards.
namespace pyranet::oracle {

// Direct six-loop evaluation over (set, map, row, col) then (d, i, j), with
// the same double accumulation order as corr3d_forward.
template <typename T>
[[nodiscard]] LayerOutput<T> naive_corr3d(const Tensor<T>& x, const ParamSet<T>& p, const LayerSpec& spec);

// Winning input index per output, first maximum in (i, j, d) scan order.
[[nodiscard]] std::vector<std::size_t> naive_pool_argmax(const Tensor<double>& x, const LayerSpec& spec);

// Frozen per-(map, set) statistics of every norm layer, keyed by layer index.
struct NormStats {
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> stddev;
};

// Everything recorded by one naive forward pass.
struct Trace {
    std::vector<Tensor<double>> outputs;  // per layer
    NormStats stats;
    // Pool winners and activation-kink signs; a change between two passes
    // means the loss is not differentiable between them.
    std::vector<std::size_t> pattern;
    double loss = 0.0;
};

// Forward pass of the whole network in double. With `frozen`, norm layers use
// the given statistics instead of their own.
[[nodiscard]] Trace naive_forward(const NetworkModel<double>& model, const Tensor<double>& input,
                                  std::span<const double> target, Loss loss,
                                  const NormStats* frozen = nullptr);

// (L(w + h) - L(w - h)) / 2h, restoring `param` afterwards.
[[nodiscard]] double fd_gradient(const std::function<double()>& loss, double& param, double h);

// |a - n| / max(|a|, |n|, 1e-8).
[[nodiscard]] double relative_error(double analytic, double numeric);

struct FailingCoordinate {
    std::string tensor;  // e.g. "weights", "biases", "input"
    std::size_t index = 0;
    int row = 0, col = 0, map = 0, set = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    std::string layer;
    std::size_t sampled = 0;
    std::size_t skipped = 0;  // samples straddling a kink
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    double tolerance = 1e-4;
    std::vector<FailingCoordinate> failures;

    [[nodiscard]] bool passed() const { return sampled > 0 && failures.empty(); }
};

// Applied to every analytic weight gradient before comparison. Used to check
// that a broken gradient is caught.
using GradientMutation = std::function<void(LayerKind kind, Tensor<double>& grad_w)>;

struct SuiteOptions {
    std::uint64_t seed = 1;
    std::size_t samples = 100;  // per tensor, or all when fewer
    NormGrad norm = NormGrad::stop_gradient;
    Loss loss = Loss::ce;
    double h = 1e-3;
    double tolerance = 1e-4;
    GradientMutation mutate;
};

// Miniature network with the preset's layer order: 8x8x5 input, two weight
// sets, D = 2, tanh activations, three outputs.
[[nodiscard]] NetworkPreset mini_network(const std::string& preset = "tiny");

// Layer-level checks (corr, pool, norm, fc, output, lrelu), then the composed
// network one report per parameterized layer. The composed check samples
// weights plus all biases of one map per layer. In stop_gradient mode the
// oracle freezes norm statistics at the unperturbed point.
[[nodiscard]] std::vector<GradCheckReport> run_suite(const SuiteOptions& opts,
                                                     const std::string& preset = "tiny");

[[nodiscard]] bool all_passed(const std::vector<GradCheckReport>& reports);

void write_report_table(std::ostream& os, const std::vector<GradCheckReport>& reports);
void write_report_csv(std::ostream& os, const std::vector<GradCheckReport>& reports);

}  // namespace pyranet::oracle
