#pragma once

#include "pyranet/fusion.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pyranet {

struct SvmParams {
    double c_reg = 1.0;
    double tol = 1e-3;  // duality gap at which a binary machine stops
    int max_epochs = 2000;
    std::uint64_t seed = 1;
};

// Linear soft-margin machine on the bias-augmented input (x, 1):
//   P(w, b) = 1/2 (|w|^2 + b^2) + C sum_i max(0, 1 - y_i (w.x_i + b))
//   D(a)    = sum_i a_i - 1/2 |sum_i a_i y_i (x_i, 1)|^2,  0 <= a_i <= C
struct BinarySvm {
    std::vector<double> w;
    double b = 0.0;
    double primal = 0.0;
    double dual = 0.0;
    int epochs = 0;
    bool converged = false;

    [[nodiscard]] double decision(std::span<const float> x) const;
};

// Dual coordinate descent over the box-constrained dual, sweeping the points
// in a seeded random order and stopping once P - D <= tol. labels are +-1.
[[nodiscard]] BinarySvm train_binary_svm(const std::vector<std::vector<float>>& x,
                                         std::span<const int> labels, const SvmParams& params);

[[nodiscard]] double svm_primal_objective(const std::vector<std::vector<float>>& x,
                                          std::span<const int> labels, std::span<const double> w,
                                          double b, double c_reg);

// One-vs-all: machine c separates class c (+1) from the rest (-1).
struct SvmModel {
    int classes = 0;
    std::size_t dim = 0;
    SvmParams params;
    std::vector<BinarySvm> machines;

    [[nodiscard]] std::vector<double> decision_values(std::span<const float> x) const;
};

// Requires at least two classes and equal-length vectors. Labels must be
// dense in [0, classes).
[[nodiscard]] SvmModel svm_train(const std::vector<FusedVector>& features, const SvmParams& params);

// argmax_c (w_c.x + b_c), lowest class index on ties.
[[nodiscard]] int svm_predict(const SvmModel& model, std::span<const float> x);

// Fraction of labelled vectors classified correctly.
[[nodiscard]] double svm_accuracy(const SvmModel& model, const std::vector<FusedVector>& features);

// Text format:
//   3DPNSVM 1 <classes> <dim> <C> <tol>
//   <b_c>,<w_c1>,...,<w_cdim>     one line per class, %.17g
void write_svm_model(const std::filesystem::path& path, const SvmModel& model);
[[nodiscard]] SvmModel read_svm_model(const std::filesystem::path& path);

}  // namespace pyranet
