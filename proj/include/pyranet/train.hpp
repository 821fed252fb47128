#pragma once

#include "pyranet/backprop.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace pyranet {

class training_diverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    Loss loss = Loss::ce;
    NormGrad norm_grad = NormGrad::stop_gradient;
    double lr0 = 0.00015;
    double decay = 0.9;
    int decay_every = 10;
    int batch = 200;
    int max_epochs = 200;
    int patience = 10;  // epochs without validation improvement; 0 disables
    std::uint64_t seed = 1;
    bool deterministic = true;

    void validate() const;

    // AR: 0.00015, x0.9 every 10 epochs, batch 200.
    static TrainConfig ar();
    // DSR: 0.000015, x0.9 every 4 epochs, batch 100.
    static TrainConfig dsr();
};

// lr0 * decay^floor(epoch / decay_every).
[[nodiscard]] double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct EpochMetrics {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;  // mean per clip
    double train_acc = 0.0;   // running accuracy over the epoch's forward passes
    std::optional<double> val_acc;
};

// epoch,lr,train_loss,train_acc,val_acc with a header line.
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const EpochMetrics& m);

struct TrainState {
    int next_epoch = 0;
    std::uint64_t rng_state = 0;
    double best_val = -1.0;
    int stale_epochs = 0;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    TrainState state;
    bool early_stopped = false;
};

// Called after every epoch with the updated model; returning false stops.
using EpochCallback =
    std::function<bool(const NetworkModel<float>&, const EpochMetrics&, const TrainState&)>;

// Mini-batch SGD. Every epoch shuffles the training clips, then for each batch
// of K clips runs forward and backward, sums the per-clip gradients in clip
// order, and applies one delta-rule step at lr_at_epoch. Serial execution is
// bit-reproducible for a fixed seed. With deterministic=false and more than
// one thread the clips of a batch run in parallel.
TrainResult train(NetworkModel<float>& model, const std::vector<Clip>& train_set,
                  const std::vector<Clip>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {},
                  std::optional<TrainState> resume = std::nullopt);

// Gradient of the summed loss over `batch` clips.
template <typename T>
double batch_gradient(const NetworkModel<T>& model, std::span<const Clip> batch,
                      const BackwardOptions& opts, GradientSet& grads, int* correct = nullptr);

struct EvalReport {
    int classes = 0;
    std::vector<int> per_class_total;
    std::vector<int> per_class_correct;
    std::vector<std::vector<int>> confusion;  // [truth][predicted]
    double mean_loss = 0.0;

    [[nodiscard]] int total() const;
    [[nodiscard]] double accuracy() const;
    [[nodiscard]] double class_accuracy(int c) const;
};

EvalReport evaluate(const NetworkModel<float>& model, const std::vector<Clip>& clips);

}  // namespace pyranet
