#include "pyranet/oracle.hpp"

#include "pyranet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

namespace pyranet::oracle {

namespace {

std::size_t at(const Shape& s, int row, int col, int map, int set) {
    return ((static_cast<std::size_t>(set) * s.maps + map) * s.height + row) * s.width + col;
}

template <typename T>
T act(const ActivationKind& k, T x) {
    switch (k.type) {
        case Activation::identity: return x;
        case Activation::sigmoid: return T(1) / (T(1) + std::exp(-x));
        case Activation::tanh: return std::tanh(x);
        case Activation::lrelu: return x > T(0) ? x : static_cast<T>(k.slope) * x;
    }
    return x;
}

Shape out_extent(const Shape& in, const LayerSpec& spec) {
    const auto& g = spec.geom;
    const int step = g.rf - g.overlap;
    Shape out;
    out.width = (in.width - g.rf) / step + 1;
    out.height = (in.height - g.rf) / step + 1;
    out.maps = (in.maps - g.depth) / g.temporal_stride + 1;
    out.sets = spec.kind == LayerKind::corr3d ? spec.sets : in.sets;
    return out;
}

void push_kinks(const ActivationKind& k, const Tensor<double>& preact, std::vector<std::size_t>& pattern) {
    if (k.type != Activation::lrelu) return;
    for (std::size_t i = 0; i < preact.size(); ++i) pattern.push_back(preact[i] > 0.0 ? 1 : 0);
}

struct PoolResult {
    Tensor<double> preact, out;
    std::vector<std::size_t> winners;
};

PoolResult naive_pool(const Tensor<double>& x, const ParamSet<double>& p, const LayerSpec& spec) {
    const Shape in = x.shape();
    const Shape os = out_extent(in, spec);
    const auto& g = spec.geom;
    const int step = g.rf - g.overlap;
    PoolResult r{Tensor<double>(os), Tensor<double>(os), {}};
    for (int s = 0; s < os.sets; ++s) {
        for (int z = 0; z < os.maps; ++z) {
            for (int u = 0; u < os.height; ++u) {
                for (int v = 0; v < os.width; ++v) {
                    double best = -INFINITY;
                    std::size_t win = 0;
                    for (int i = u * step; i < u * step + g.rf; ++i) {
                        for (int j = v * step; j < v * step + g.rf; ++j) {
                            for (int d = 0; d < g.depth; ++d) {
                                const std::size_t k = at(in, i, j, z * g.temporal_stride + d, s);
                                if (x[k] > best) {
                                    best = x[k];
                                    win = k;
                                }
                            }
                        }
                    }
                    const double w = p.weights[static_cast<std::size_t>(u) * os.width + v];
                    const double b = p.biases[static_cast<std::size_t>(s) * os.maps + z];
                    const std::size_t o = at(os, u, v, z, s);
                    r.preact[o] = w * best + b;
                    r.out[o] = act(spec.activation, r.preact[o]);
                    r.winners.push_back(win);
                }
            }
        }
    }
    return r;
}

Tensor<double> naive_norm(const Tensor<double>& x, std::vector<double>& mean, std::vector<double>& sd,
                          bool frozen) {
    const Shape sh = x.shape();
    Tensor<double> y(sh);
    const double n = static_cast<double>(sh.width) * sh.height;
    if (!frozen) {
        mean.assign(static_cast<std::size_t>(sh.maps) * sh.sets, 0.0);
        sd.assign(mean.size(), 0.0);
    }
    for (int s = 0; s < sh.sets; ++s) {
        for (int m = 0; m < sh.maps; ++m) {
            const std::size_t q = static_cast<std::size_t>(s) * sh.maps + m;
            if (!frozen) {
                double mu = 0.0;
                for (int i = 0; i < sh.height; ++i)
                    for (int j = 0; j < sh.width; ++j) mu += x[at(sh, i, j, m, s)];
                mu /= n;
                double var = 0.0;
                for (int i = 0; i < sh.height; ++i)
                    for (int j = 0; j < sh.width; ++j) var += (x[at(sh, i, j, m, s)] - mu) * (x[at(sh, i, j, m, s)] - mu);
                mean[q] = mu;
                sd[q] = std::sqrt(var / n);
            }
            for (int i = 0; i < sh.height; ++i)
                for (int j = 0; j < sh.width; ++j) {
                    const std::size_t k = at(sh, i, j, m, s);
                    y[k] = (x[k] - mean[q]) / (sd[q] + 1e-8);
                }
        }
    }
    return y;
}

LayerOutput<double> naive_fc(const Tensor<double>& x, const ParamSet<double>& p, const LayerSpec& spec) {
    const int C = spec.out_classes;
    const std::size_t I = x.size();
    LayerOutput<double> r{Tensor<double>({C, 1, 1, 1}), Tensor<double>({C, 1, 1, 1})};
    for (int c = 0; c < C; ++c) {
        double acc = p.biases[c];
        for (std::size_t i = 0; i < I; ++i) acc += p.weights[i * C + c] * x[i];
        r.preact[c] = acc;
        r.out[c] = act(spec.activation, acc);
    }
    return r;
}

double naive_loss(std::span<const double> y, std::span<const double> t, Loss loss) {
    if (loss == Loss::mse) {
        double e = 0.0;
        for (std::size_t c = 0; c < y.size(); ++c) e += 0.5 * (y[c] - t[c]) * (y[c] - t[c]);
        return e;
    }
    const double mx = *std::max_element(y.begin(), y.end());
    double z = 0.0;
    for (const double v : y) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    double e = 0.0;
    for (std::size_t c = 0; c < y.size(); ++c) e -= t[c] * (y[c] - log_z);
    return e;
}

// ---- finite-difference bookkeeping ------------------------------------------

struct Eval {
    double loss = 0.0;
    std::vector<std::size_t> pattern;
};
using Objective = std::function<Eval()>;

std::optional<double> central_difference(const Objective& f, double& param, double h,
                                         const std::vector<std::size_t>& base) {
    const double saved = param;
    param = saved + h;
    const Eval plus = f();
    param = saved - h;
    const Eval minus = f();
    param = saved;
    if (plus.pattern != base || minus.pattern != base) return std::nullopt;
    return (plus.loss - minus.loss) / (2.0 * h);
}

std::vector<std::size_t> pick(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n <= k) return idx;
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Every index of one (map, set) plane of a tensor.
std::vector<std::size_t> one_map(const Shape& s, int map, int set) {
    std::vector<std::size_t> idx;
    for (int i = 0; i < s.height; ++i)
        for (int j = 0; j < s.width; ++j) idx.push_back(at(s, i, j, map, set));
    return idx;
}

class Checker {
public:
    Checker(GradCheckReport& rep, double h) : rep_(rep), h_(h) {}

    void check(const std::string& tensor, Tensor<double>& values, const Tensor<double>& analytic,
               const std::vector<std::size_t>& indices, const Objective& f) {
        const Eval base = f();
        for (const std::size_t k : indices) {
            const auto num = central_difference(f, values[k], h_, base.pattern);
            if (!num) {
                ++rep_.skipped;
                continue;
            }
            const double a = analytic[k];
            const double e = relative_error(a, *num);
            ++rep_.sampled;
            sum_ += e;
            rep_.max_rel_err = std::max(rep_.max_rel_err, e);
            rep_.mean_rel_err = sum_ / static_cast<double>(rep_.sampled);
            if (!(e < rep_.tolerance)) {
                const Shape& s = values.shape();
                FailingCoordinate fc{tensor, k, 0, 0, 0, 0, a, *num, e};
                fc.col = static_cast<int>(k % s.width);
                fc.row = static_cast<int>((k / s.width) % s.height);
                fc.map = static_cast<int>((k / s.map_size()) % s.maps);
                fc.set = static_cast<int>(k / (s.map_size() * s.maps));
                rep_.failures.push_back(fc);
            }
        }
    }

private:
    GradCheckReport& rep_;
    double h_;
    double sum_ = 0.0;
};

Tensor<double> random_tensor(Shape s, Rng& rng, double lo, double hi) {
    Tensor<double> t(s);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

ParamSet<double> random_params(const LayerSpec& spec, const Shape& in, const Shape& out, Rng& rng) {
    ParamSet<double> p;
    p.kind = spec.kind;
    p.weights = random_tensor(param_weight_shape(spec, in, out), rng, -0.25, 0.25);
    p.biases = random_tensor(param_bias_shape(spec, in, out), rng, -0.2, 0.2);
    return p;
}

GradCheckReport new_report(const std::string& name, const SuiteOptions& o) {
    GradCheckReport r;
    r.layer = name;
    r.tolerance = o.tolerance;
    return r;
}

void mutate(const SuiteOptions& o, LayerKind kind, Tensor<double>& g) {
    if (o.mutate) o.mutate(kind, g);
}

// ---- layer-level checks ------------------------------------------------------

void check_corr_case(GradCheckReport& rep, const SuiteOptions& o, Rng& rng, Shape in, ActivationKind a,
                     bool keep_off_kink) {
    const LayerSpec spec = LayerSpec::corr({3, 2, 2, 1}, 2, a);
    const Shape out = out_extent(in, spec);
    Tensor<double> x = random_tensor(in, rng, 0.0, 1.0);
    ParamSet<double> p = random_params(spec, in, out, rng);
    if (keep_off_kink) {
        // Keep every pre-activation at least 0.1 away from the lrelu kink.
        const auto s = naive_corr3d(x, p, spec).preact;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (std::abs(s[k]) < 0.1) p.biases[k] += s[k] >= 0 ? 0.2 : -0.2;
        }
    }
    const Tensor<double> c = random_tensor(out, rng, -1.0, 1.0);

    const auto fwd = corr3d_forward(x, p, spec);
    const auto delta = apply_activation_deriv(c, fwd.preact, spec.activation);
    Tensor<double> gw(p.weights.shape()), gb(p.biases.shape());
    corr3d_weight_grad(delta, x, spec, gw);
    corr3d_bias_grad(delta, gb);
    mutate(o, LayerKind::corr3d, gw);
    const Tensor<double> gx = corr3d_backward_input(delta, p, spec, in);

    const Objective f = [&] {
        const auto r = naive_corr3d(x, p, spec);
        Eval e{dot(c, r.out), {}};
        push_kinks(spec.activation, r.preact, e.pattern);
        return e;
    };
    Checker chk(rep, o.h);
    chk.check("weights", p.weights, gw, pick(p.weights.size(), o.samples, rng), f);
    chk.check("biases", p.biases, gb,
              one_map(gb.shape(), static_cast<int>(rng.below(out.maps)), static_cast<int>(rng.below(out.sets))), f);
    chk.check("input", x, gx, pick(x.size(), o.samples, rng), f);
}

GradCheckReport check_corr(const SuiteOptions& o, Rng& rng) {
    auto rep = new_report("corr", o);
    check_corr_case(rep, o, rng, {8, 8, 5, 1}, ActivationKind::tanh(), false);
    check_corr_case(rep, o, rng, {7, 6, 4, 2}, ActivationKind::tanh(), false);
    return rep;
}

GradCheckReport check_lrelu(const SuiteOptions& o, Rng& rng) {
    auto rep = new_report("lrelu", o);
    check_corr_case(rep, o, rng, {8, 8, 5, 1}, ActivationKind::lrelu(0.01), true);
    return rep;
}

GradCheckReport check_pool(const SuiteOptions& o, Rng& rng) {
    auto rep = new_report("pool", o);
    const LayerSpec spec = LayerSpec::pool({2, 0, 2, 1}, ActivationKind::tanh());
    const Shape in{6, 6, 4, 2};
    const Shape out = out_extent(in, spec);
    // Distinct values 0.01 apart so no perturbation of size h changes a winner.
    Tensor<double> x(in);
    std::vector<std::size_t> perm(in.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t k = 0; k < in.size(); ++k) x[k] = 0.01 * static_cast<double>(perm[k]) - 1.44;
    ParamSet<double> p = random_params(spec, in, out, rng);
    const Tensor<double> c = random_tensor(out, rng, -1.0, 1.0);

    const auto fwd = pool3d_forward(x, p, spec);
    const auto delta = apply_activation_deriv(c, fwd.preact, spec.activation);
    Tensor<double> gw(p.weights.shape()), gb(p.biases.shape());
    pool3d_weight_grad(delta, fwd.maxval, gw);
    pool3d_bias_grad(delta, gb);
    mutate(o, LayerKind::pool3d, gw);
    const Tensor<double> gx = pool3d_backward_input(delta, p, fwd.argmax);

    const Objective f = [&] {
        auto r = naive_pool(x, p, spec);
        return Eval{dot(c, r.out), std::move(r.winners)};
    };
    Checker chk(rep, o.h);
    chk.check("weights", p.weights, gw, pick(p.weights.size(), o.samples, rng), f);
    chk.check("biases", p.biases, gb, pick(p.biases.size(), o.samples, rng), f);
    chk.check("input", x, gx, pick(x.size(), o.samples, rng), f);
    return rep;
}

GradCheckReport check_norm(const SuiteOptions& o, Rng& rng) {
    auto rep = new_report("norm", o);
    const Shape in{5, 4, 3, 2};
    Tensor<double> x = random_tensor(in, rng, -1.0, 2.0);
    const Tensor<double> c = random_tensor(in, rng, -1.0, 1.0);
    const auto fwd = norm_forward(x);
    const Tensor<double> gx = norm_backward(c, x, fwd.mean, fwd.stddev, o.norm);

    std::vector<double> mean, sd;
    (void)naive_norm(x, mean, sd, false);
    const bool frozen = o.norm == NormGrad::stop_gradient;
    const Objective f = [&] {
        std::vector<double> m = mean, s = sd;
        return Eval{dot(c, naive_norm(x, m, s, frozen)), {}};
    };
    Checker chk(rep, o.h);
    chk.check("input", x, gx, pick(x.size(), o.samples, rng), f);
    return rep;
}

GradCheckReport check_fc(const SuiteOptions& o, Rng& rng) {
    auto rep = new_report("fc", o);
    const LayerSpec spec = LayerSpec::fc(3, ActivationKind::tanh());
    Tensor<double> x = random_tensor({4, 3, 2, 1}, rng, -1.0, 1.0);
    const Shape wshape{3, static_cast<int>(x.size()), 1, 1};
    ParamSet<double> p{LayerKind::fc, random_tensor(wshape, rng, -0.5, 0.5), random_tensor({3, 1, 1, 1}, rng, -0.2, 0.2)};
    const Tensor<double> c = random_tensor({3, 1, 1, 1}, rng, -1.0, 1.0);

    const auto fwd = fc_forward<double>(x.values(), p, spec);
    const auto delta = apply_activation_deriv(c, fwd.preact, spec.activation);
    Tensor<double> gw(p.weights.shape()), gb(p.biases.shape());
    fc_weight_grad<double>(delta.values(), x.values(), gw);
    fc_bias_grad<double>(delta.values(), gb);
    mutate(o, LayerKind::fc, gw);
    const Tensor<double> gx(x.shape(), fc_backward_input<double>(delta.values(), p));

    const Objective f = [&] { return Eval{dot(c, naive_fc(x, p, spec).out), {}}; };
    Checker chk(rep, o.h);
    chk.check("weights", p.weights, gw, pick(p.weights.size(), o.samples, rng), f);
    chk.check("biases", p.biases, gb, pick(p.biases.size(), o.samples, rng), f);
    chk.check("input", x, gx, pick(x.size(), o.samples, rng), f);
    return rep;
}

GradCheckReport check_output(const SuiteOptions& o, Rng& rng) {
    auto rep = new_report("output", o);
    const struct {
        Loss loss;
        ActivationKind head;
    } cases[] = {{Loss::ce, ActivationKind::identity()},
                 {Loss::ce, ActivationKind::tanh()},
                 {Loss::mse, ActivationKind::tanh()},
                 {Loss::mse, ActivationKind::sigmoid()}};
    for (const auto& cs : cases) {
        const int C = 5;
        Tensor<double> s = random_tensor({C, 1, 1, 1}, rng, -2.0, 2.0);
        const auto t = one_hot<double>(static_cast<int>(rng.below(C)), C);
        std::vector<double> y(C);
        for (int k = 0; k < C; ++k) y[k] = act(cs.head, s[k]);
        const auto post = softmax<double>(y);
        const auto d = output_delta<double>(post, y, s.values(), t, cs.loss, cs.head);
        const Tensor<double> gs({C, 1, 1, 1}, d);
        const Objective f = [&] {
            std::vector<double> yy(C);
            for (int k = 0; k < C; ++k) yy[k] = act(cs.head, s[k]);
            return Eval{naive_loss(yy, t, cs.loss), {}};
        };
        Checker chk(rep, o.h);
        chk.check("scores", s, gs, pick(C, o.samples, rng), f);
    }
    return rep;
}

// ---- composed network --------------------------------------------------------

std::vector<GradCheckReport> check_network(const SuiteOptions& o, const std::string& preset, Rng& rng) {
    const auto mini = mini_network(preset);
    NetworkModel<double> model = NetworkModel<double>::build(mini.input, mini.specs, rng);
    // Non-zero biases so the bias paths carry signal.
    for (auto& l : model.layers()) {
        for (auto& b : l.params.biases.values()) b = rng.uniform(-0.2, 0.2);
    }
    const Tensor<double> x = random_tensor(mini.input, rng, 0.0, 1.0);
    const int classes = model.classes();
    const auto target = one_hot<double>(static_cast<int>(rng.below(classes)), classes);

    GradientSet grads = GradientSet::zeros_like(model);
    const auto cache = forward(model, x);
    (void)backward<double>(model, cache, target, {o.loss, o.norm}, grads);

    const Trace base = naive_forward(model, x, target, o.loss);
    const NormStats* frozen = o.norm == NormGrad::stop_gradient ? &base.stats : nullptr;
    const Objective f = [&] {
        auto t = naive_forward(model, x, target, o.loss, frozen);
        return Eval{t.loss, std::move(t.pattern)};
    };

    std::vector<GradCheckReport> reps;
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
        auto& layer = model.layers()[l];
        if (layer.spec.kind == LayerKind::norm) continue;
        auto rep = new_report("net:" + layer.name, o);
        mutate(o, layer.spec.kind, grads.weights[l]);
        auto& p = layer.params;
        const Shape bs = p.biases.shape();
        Checker chk(rep, o.h);
        chk.check("weights", p.weights, grads.weights[l], pick(p.weights.size(), o.samples, rng), f);
        chk.check("biases", p.biases, grads.biases[l],
                  one_map(bs, static_cast<int>(rng.below(bs.maps)), static_cast<int>(rng.below(bs.sets))), f);
        reps.push_back(std::move(rep));
    }
    return reps;
}

}  // namespace

template <typename T>
LayerOutput<T> naive_corr3d(const Tensor<T>& x, const ParamSet<T>& p, const LayerSpec& spec) {
    const Shape in = x.shape();
    const Shape os = out_extent(in, spec);
    const Shape ws = p.weights.shape();
    const auto& g = spec.geom;
    const int step = g.rf - g.overlap;
    LayerOutput<T> r{Tensor<T>(os), Tensor<T>(os)};
    for (int s = 0; s < os.sets; ++s) {
        const int s_in = in.sets == 1 ? 0 : s;
        for (int z = 0; z < os.maps; ++z) {
            for (int u = 0; u < os.height; ++u) {
                for (int v = 0; v < os.width; ++v) {
                    double acc = 0.0;
                    for (int d = 0; d < g.depth; ++d) {
                        for (int i = u * step; i < u * step + g.rf; ++i) {
                            for (int j = v * step; j < v * step + g.rf; ++j) {
                                acc += static_cast<double>(p.weights[at(ws, i, j, d, s)]) *
                                       static_cast<double>(x[at(in, i, j, z * g.temporal_stride + d, s_in)]);
                            }
                        }
                    }
                    acc += static_cast<double>(p.biases[at(os, u, v, z, s)]);
                    const std::size_t o = at(os, u, v, z, s);
                    r.preact[o] = static_cast<T>(acc);
                    r.out[o] = act(spec.activation, r.preact[o]);
                }
            }
        }
    }
    return r;
}

template LayerOutput<float> naive_corr3d(const Tensor<float>&, const ParamSet<float>&, const LayerSpec&);
template LayerOutput<double> naive_corr3d(const Tensor<double>&, const ParamSet<double>&, const LayerSpec&);

std::vector<std::size_t> naive_pool_argmax(const Tensor<double>& x, const LayerSpec& spec) {
    const Shape os = out_extent(x.shape(), spec);
    ParamSet<double> p{LayerKind::pool3d, Tensor<double>({os.width, os.height, 1, 1}, 1.0),
                       Tensor<double>({1, 1, os.maps, os.sets})};
    return naive_pool(x, p, spec).winners;
}

Trace naive_forward(const NetworkModel<double>& model, const Tensor<double>& input, std::span<const double> target,
                    Loss loss, const NormStats* frozen) {
    Trace tr;
    const auto& layers = model.layers();
    tr.stats.mean.resize(layers.size());
    tr.stats.stddev.resize(layers.size());
    Tensor<double> x = input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        switch (layer.spec.kind) {
            case LayerKind::corr3d: {
                auto r = naive_corr3d(x, layer.params, layer.spec);
                push_kinks(layer.spec.activation, r.preact, tr.pattern);
                x = std::move(r.out);
                break;
            }
            case LayerKind::pool3d: {
                auto r = naive_pool(x, layer.params, layer.spec);
                tr.pattern.insert(tr.pattern.end(), r.winners.begin(), r.winners.end());
                push_kinks(layer.spec.activation, r.preact, tr.pattern);
                x = std::move(r.out);
                break;
            }
            case LayerKind::norm: {
                auto& m = tr.stats.mean[l];
                auto& s = tr.stats.stddev[l];
                if (frozen) {
                    m = frozen->mean.at(l);
                    s = frozen->stddev.at(l);
                }
                x = naive_norm(x, m, s, frozen != nullptr);
                break;
            }
            case LayerKind::fc: {
                auto r = naive_fc(x, layer.params, layer.spec);
                push_kinks(layer.spec.activation, r.preact, tr.pattern);
                x = std::move(r.out);
                break;
            }
        }
        tr.outputs.push_back(x);
    }
    tr.loss = naive_loss(x.values(), target, loss);
    return tr;
}

double fd_gradient(const std::function<double()>& loss, double& param, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: h must be > 0");
    const double saved = param;
    param = saved + h;
    const double plus = loss();
    param = saved - h;
    const double minus = loss();
    param = saved;
    return (plus - minus) / (2.0 * h);
}

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

NetworkPreset mini_network(const std::string& preset) {
    NetworkPreset base = make_preset(preset, 3, ActivationKind::tanh());
    NetworkPreset mini{preset + "-mini", {8, 8, 5, 1}, {}};
    bool first_corr = true;
    for (const auto& s : base.specs) {
        switch (s.kind) {
            case LayerKind::corr3d:
                mini.specs.push_back(LayerSpec::corr(first_corr ? LayerGeometry{3, 2, 2, 1} : LayerGeometry{2, 1, 2, 1},
                                                     2, ActivationKind::tanh()));
                first_corr = false;
                break;
            case LayerKind::pool3d:
                mini.specs.push_back(LayerSpec::pool({2, 0, 2, 1}, ActivationKind::tanh()));
                break;
            case LayerKind::norm: mini.specs.push_back(LayerSpec::norm()); break;
            case LayerKind::fc: mini.specs.push_back(LayerSpec::fc(3, ActivationKind::tanh())); break;
        }
    }
    (void)chain_shapes(mini.input, mini.specs);
    return mini;
}

std::vector<GradCheckReport> run_suite(const SuiteOptions& opts, const std::string& preset) {
    Rng rng(opts.seed);
    std::vector<GradCheckReport> out;
    out.push_back(check_corr(opts, rng));
    out.push_back(check_pool(opts, rng));
    out.push_back(check_norm(opts, rng));
    out.push_back(check_fc(opts, rng));
    out.push_back(check_output(opts, rng));
    out.push_back(check_lrelu(opts, rng));
    for (auto& r : check_network(opts, preset, rng)) out.push_back(std::move(r));
    return out;
}

bool all_passed(const std::vector<GradCheckReport>& reports) {
    return !reports.empty() &&
           std::all_of(reports.begin(), reports.end(), [](const GradCheckReport& r) { return r.passed(); });
}

void write_report_table(std::ostream& os, const std::vector<GradCheckReport>& reports) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s %8s %8s %13s %13s  %s\n", "layer", "sampled", "skipped", "max_rel_err",
                  "mean_rel_err", "result");
    os << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-14s %8zu %8zu %13.3e %13.3e  %s\n", r.layer.c_str(), r.sampled, r.skipped,
                      r.max_rel_err, r.mean_rel_err, r.passed() ? "PASS" : "FAIL");
        os << buf;
        std::size_t shown = 0;
        for (const auto& f : r.failures) {
            if (++shown > 5) {
                os << "    ... " << (r.failures.size() - 5) << " more\n";
                break;
            }
            std::snprintf(buf, sizeof buf, "    %s[%zu] (row %d, col %d, map %d, set %d): analytic %.6e numeric %.6e\n",
                          f.tensor.c_str(), f.index, f.row, f.col, f.map, f.set, f.analytic, f.numeric);
            os << buf;
        }
    }
}

void write_report_csv(std::ostream& os, const std::vector<GradCheckReport>& reports) {
    os << "layer,sampled,skipped,max_rel_err,mean_rel_err,tolerance,passed,failures\n";
    char buf[64];
    for (const auto& r : reports) {
        os << r.layer << ',' << r.sampled << ',' << r.skipped << ',';
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g", r.max_rel_err, r.mean_rel_err, r.tolerance);
        os << buf << ',' << (r.passed() ? 1 : 0) << ',' << r.failures.size() << '\n';
    }
}

}  // namespace pyranet::oracle
