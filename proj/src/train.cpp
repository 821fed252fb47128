#include "pyranet/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pyranet {

void TrainConfig::validate() const {
    if (!(lr0 > 0.0)) throw std::invalid_argument("initial learning rate must be > 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0, 1]");
    if (decay_every < 1) throw std::invalid_argument("decay_every must be >= 1");
    if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
    if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
    if (patience < 0) throw std::invalid_argument("patience must be >= 0");
}

TrainConfig TrainConfig::ar() {
    TrainConfig c;
    c.lr0 = 0.00015;
    c.decay = 0.9;
    c.decay_every = 10;
    c.batch = 200;
    return c;
}

TrainConfig TrainConfig::dsr() {
    TrainConfig c;
    c.lr0 = 0.000015;
    c.decay = 0.9;
    c.decay_every = 4;
    c.batch = 100;
    return c;
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
    const double raw = cfg.lr0 * std::pow(cfg.decay, epoch / cfg.decay_every);
    // Round to 15 significant digits so decimal schedules come out as the
    // nearest double of the decimal rate (0.000015 * 0.9 -> 0.0000135).
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", raw);
    return std::strtod(buf, nullptr);
}

void write_metrics_header(std::ostream& os) { os << "epoch,lr,train_loss,train_acc,val_acc\n"; }

void write_metrics_row(std::ostream& os, const EpochMetrics& m) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << m.epoch << ',' << std::setprecision(9) << m.lr << ',' << m.train_loss << ','
       << m.train_acc << ',';
    if (m.val_acc) os << *m.val_acc;
    os << '\n';
    os.flags(flags);
    os.precision(prec);
}

template <typename T>
double batch_gradient(const NetworkModel<T>& model, std::span<const Clip> batch,
                      const BackwardOptions& opts, GradientSet& grads, int* correct) {
    double loss = 0.0;
    int hits = 0;
    for (const Clip& clip : batch) {
        if (!clip.label) throw std::invalid_argument("training clip without a label");
        const auto cache = forward(model, clip.to_tensor<T>());
        const auto target = one_hot<T>(*clip.label, model.classes());
        loss += backward<T>(model, cache, target, opts, grads);
        if (argmax_first(std::span<const T>(cache.posteriors)) == *clip.label) ++hits;
    }
    if (correct) *correct += hits;
    return loss;
}

template double batch_gradient(const NetworkModel<float>&, std::span<const Clip>,
                               const BackwardOptions&, GradientSet&, int*);
template double batch_gradient(const NetworkModel<double>&, std::span<const Clip>,
                               const BackwardOptions&, GradientSet&, int*);

namespace {

double parallel_batch_gradient(const NetworkModel<float>& model, std::span<const Clip> batch,
                               const BackwardOptions& opts, GradientSet& grads, int& correct) {
#ifdef _OPENMP
    const int threads = omp_get_max_threads();
    if (threads > 1 && batch.size() > 1) {
        std::vector<GradientSet> partial(threads, GradientSet::zeros_like(model));
        std::vector<double> losses(threads, 0.0);
        std::vector<int> hits(threads, 0);
        const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            const int t = omp_get_thread_num();
            losses[t] += batch_gradient<float>(model, batch.subspan(k, 1), opts, partial[t], &hits[t]);
        }
        double loss = 0.0;
        for (int t = 0; t < threads; ++t) {
            grads.add(partial[t]);
            loss += losses[t];
            correct += hits[t];
        }
        return loss;
    }
#endif
    return batch_gradient<float>(model, batch, opts, grads, &correct);
}

}  // namespace

TrainResult train(NetworkModel<float>& model, const std::vector<Clip>& train_set,
                  const std::vector<Clip>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch, std::optional<TrainState> resume) {
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("training set is empty");
    for (const auto& clip : train_set) {
        if (clip.shape() != model.input_shape()) {
            throw shape_error("training clip " + clip.shape().str() + " does not match model input " +
                              model.input_shape().str());
        }
    }

    TrainResult result;
    TrainState state = resume.value_or(TrainState{0, Rng(cfg.seed).state(), -1.0, 0});
    Rng rng(0);
    rng.set_state(state.rng_state);

    const BackwardOptions opts{cfg.loss, cfg.norm_grad};
    GradientSet grads = GradientSet::zeros_like(model);
    std::vector<std::size_t> order(train_set.size());
    std::vector<Clip> batch;

    for (int epoch = state.next_epoch; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        int correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
            grads.clear();
            const double loss =
                cfg.deterministic
                    ? batch_gradient<float>(model, batch, opts, grads, &correct)
                    : parallel_batch_gradient(model, batch, opts, grads, correct);
            if (!std::isfinite(loss) || !grads.all_finite()) {
                throw training_diverged("non-finite loss or gradient at epoch " +
                                        std::to_string(epoch) + ", batch starting at clip " +
                                        std::to_string(start) + " (lr " + std::to_string(lr) +
                                        "); lower the learning rate");
            }
            loss_sum += loss;
            sgd_update(model, grads, lr);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.lr = lr;
        m.train_loss = loss_sum / static_cast<double>(train_set.size());
        m.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
        if (!val_set.empty()) m.val_acc = evaluate(model, val_set).accuracy();
        result.history.push_back(m);

        state.next_epoch = epoch + 1;
        state.rng_state = rng.state();
        bool stop = false;
        if (m.val_acc) {
            if (*m.val_acc > state.best_val) {
                state.best_val = *m.val_acc;
                state.stale_epochs = 0;
            } else if (cfg.patience > 0 && ++state.stale_epochs >= cfg.patience) {
                stop = true;
                result.early_stopped = true;
            }
        }
        if (on_epoch && !on_epoch(model, m, state)) stop = true;
        if (stop) break;
    }
    result.state = state;
    return result;
}

int EvalReport::total() const {
    return std::accumulate(per_class_total.begin(), per_class_total.end(), 0);
}

double EvalReport::accuracy() const {
    const int n = total();
    if (n == 0) return 0.0;
    return static_cast<double>(std::accumulate(per_class_correct.begin(), per_class_correct.end(), 0)) / n;
}

double EvalReport::class_accuracy(int c) const {
    return per_class_total[c] == 0 ? 0.0
                                   : static_cast<double>(per_class_correct[c]) / per_class_total[c];
}

EvalReport evaluate(const NetworkModel<float>& model, const std::vector<Clip>& clips) {
    EvalReport rep;
    rep.classes = model.classes();
    rep.per_class_total.assign(rep.classes, 0);
    rep.per_class_correct.assign(rep.classes, 0);
    rep.confusion.assign(rep.classes, std::vector<int>(rep.classes, 0));
    std::vector<int> predicted(clips.size());
    std::vector<double> losses(clips.size());
    const auto n = static_cast<std::ptrdiff_t>(clips.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto cache = forward(model, clips[k].to_tensor<float>());
        predicted[k] = argmax_first(std::span<const float>(cache.posteriors));
        if (clips[k].label) {
            const double p = std::max(static_cast<double>(cache.posteriors[*clips[k].label]), 1e-300);
            losses[k] = -std::log(p);
        }
    }
    double loss = 0.0;
    for (std::size_t k = 0; k < clips.size(); ++k) {
        if (!clips[k].label) continue;
        const int truth = *clips[k].label;
        if (truth < 0 || truth >= rep.classes) {
            throw std::out_of_range("clip label " + std::to_string(truth) + " outside model classes");
        }
        ++rep.per_class_total[truth];
        if (predicted[k] == truth) ++rep.per_class_correct[truth];
        ++rep.confusion[truth][predicted[k]];
        loss += losses[k];
    }
    if (rep.total() > 0) rep.mean_loss = loss / rep.total();
    return rep;
}

}  // namespace pyranet
