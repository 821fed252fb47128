#include "doctest.h"

#include "pyranet/oracle.hpp"
#include "pyranet/synthetic.hpp"
#include "pyranet/train.hpp"

#include <cmath>
#include <sstream>

using namespace pyranet;

namespace {

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(s);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

TEST_CASE("fd_gradient on closed forms") {
    double w = 3.0;
    CHECK(std::abs(oracle::fd_gradient([&] { return w * w; }, w, 1e-3) - 6.0) < 1e-8);
    CHECK(w == 3.0);
    for (const double h : {1e-1, 1e-3, 1e-5}) {
        double a = 0.7;
        CHECK(oracle::fd_gradient([&] { return 2.5 * a - 1.0; }, a, h) == doctest::Approx(2.5).epsilon(1e-9));
    }
    CHECK(oracle::relative_error(1.0, 1.0) == 0.0);
    CHECK(oracle::relative_error(0.0, 1e-12) == doctest::Approx(1e-4));
    CHECK(oracle::relative_error(2.0, 1.0) == 0.5);
}

TEST_CASE("output delta matches finite differences of the loss") {
    Rng rng(21);
    for (const Loss loss : {Loss::ce, Loss::mse}) {
        for (const auto head : {ActivationKind::identity(), ActivationKind::tanh(), ActivationKind::sigmoid()}) {
            std::vector<double> s(4);
            for (auto& v : s) v = rng.uniform(-1.5, 1.5);
            const auto t = one_hot<double>(2, 4);
            auto eval = [&] {
                std::vector<double> y(4);
                for (int k = 0; k < 4; ++k) y[k] = activation_apply(head, s[k]);
                const auto p = softmax<double>(y);
                return loss_value<double>(p, y, t, loss);
            };
            std::vector<double> y(4);
            for (int k = 0; k < 4; ++k) y[k] = activation_apply(head, s[k]);
            const auto d = output_delta<double>(softmax<double>(y), y, s, t, loss, head);
            for (int k = 0; k < 4; ++k) {
                const double n = oracle::fd_gradient(eval, s[k], 1e-5);
                CHECK(oracle::relative_error(d[k], n) < 1e-6);
            }
        }
    }
}

TEST_CASE("mse loss is half the squared error") {
    const std::vector<double> y{0.5, -0.25}, t{1.0, 0.0};
    CHECK(loss_value<double>(y, y, t, Loss::mse) == doctest::Approx(0.5 * (0.25 + 0.0625)));
}

TEST_CASE("corr3d input adjoint matches the transpose of the forward map") {
    // <delta, J x> == <J^T delta, x> for the linear part of the layer.
    Rng rng(5);
    for (int n = 0; n < 20; ++n) {
        const int r = 1 + static_cast<int>(rng.below(3));
        const int o = static_cast<int>(rng.below(r));
        const int d = 1 + static_cast<int>(rng.below(2));
        const int g = 1 + static_cast<int>(rng.below(2));
        const int sets = 1 + static_cast<int>(rng.below(2));
        const Shape in{6, 5, 4, rng.below(2) ? 1 : sets};
        const LayerSpec spec = LayerSpec::corr({r, o, d, g}, sets, ActivationKind::identity());
        const Shape out = layer_output_shape(spec, in);
        ParamSet<double> p{LayerKind::corr3d, random_tensor(param_weight_shape(spec, in, out), rng),
                           Tensor<double>(param_bias_shape(spec, in, out))};
        const auto x = random_tensor(in, rng);
        const auto delta = random_tensor(out, rng);
        const auto jx = corr3d_forward(x, p, spec).out;
        const auto jt = corr3d_backward_input(delta, p, spec, in);
        CHECK(dot(delta, jx) == doctest::Approx(dot(jt, x)).epsilon(1e-12));
    }
}

TEST_CASE("corr3d gradients on a 5x5x4 layer with r=2, O=1") {
    Rng rng(8);
    const LayerSpec spec = LayerSpec::corr({2, 1, 2, 1}, 1, ActivationKind::tanh());
    const Shape in{5, 5, 4, 1};
    const Shape out = layer_output_shape(spec, in);
    auto x = random_tensor(in, rng, 0.0, 1.0);
    ParamSet<double> p{LayerKind::corr3d, random_tensor(param_weight_shape(spec, in, out), rng, -0.3, 0.3),
                       random_tensor(param_bias_shape(spec, in, out), rng, -0.1, 0.1)};
    const auto c = random_tensor(out, rng, 0.5, 1.0);
    const auto fwd = corr3d_forward(x, p, spec);
    const auto delta = apply_activation_deriv(c, fwd.preact, spec.activation);
    Tensor<double> gw(p.weights.shape()), gb(p.biases.shape());
    corr3d_weight_grad(delta, x, spec, gw);
    corr3d_bias_grad(delta, gb);
    auto f = [&] { return dot(c, oracle::naive_corr3d(x, p, spec).out); };
    for (std::size_t k = 0; k < gw.size(); ++k) {
        const double n = oracle::fd_gradient(f, p.weights[k], 1e-5);
        CHECK(oracle::relative_error(gw[k], n) < 1e-6);
    }
    for (std::size_t k = 0; k < gb.size(); ++k) CHECK(gb[k] == delta[k]);
}

TEST_CASE("pool backward routes only to the argmax") {
    Rng rng(13);
    const LayerSpec spec = LayerSpec::pool({2, 0, 2, 1}, ActivationKind::identity());
    const Shape in{4, 4, 3, 2};
    const auto x = random_tensor(in, rng);
    const Shape out = layer_output_shape(spec, in);
    ParamSet<double> p{LayerKind::pool3d, random_tensor({out.width, out.height, 1, 1}, rng),
                       Tensor<double>({1, 1, out.maps, out.sets})};
    const auto y = pool3d_forward(x, p, spec);
    const auto delta = random_tensor(out, rng);
    const auto gx = pool3d_backward_input(delta, p, y.argmax);
    Tensor<double> expect(in);
    for (std::size_t o = 0; o < delta.size(); ++o) {
        const int u = static_cast<int>((o / out.width) % out.height);
        const int v = static_cast<int>(o % out.width);
        expect[y.argmax.flat[o]] += delta[o] * p.weights(u, v, 0);
    }
    CHECK(gx == expect);

    Tensor<double> gw(p.weights.shape()), gb(p.biases.shape());
    pool3d_weight_grad(delta, y.maxval, gw);
    pool3d_bias_grad(delta, gb);
    double sum_map = 0.0;
    for (int u = 0; u < out.height; ++u)
        for (int v = 0; v < out.width; ++v) sum_map += delta(u, v, 1, 1);
    CHECK(gb(0, 0, 1, 1) == doctest::Approx(sum_map));

    ArgmaxIndex stale = y.argmax;
    stale.output.maps += 1;
    CHECK_THROWS((void)pool3d_backward_input(delta, p, stale));
}

TEST_CASE("fc gradients") {
    Rng rng(3);
    const LayerSpec spec = LayerSpec::fc(3, ActivationKind::identity());
    ParamSet<double> p{LayerKind::fc, random_tensor({3, 5, 1, 1}, rng), random_tensor({3, 1, 1, 1}, rng)};
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const std::vector<double> delta{0.3, -0.2, 0.5};
    Tensor<double> gw(p.weights.shape()), gb(p.biases.shape());
    fc_weight_grad<double>(delta, x, gw);
    fc_bias_grad<double>(delta, gb);
    for (int i = 0; i < 5; ++i)
        for (int c = 0; c < 3; ++c) CHECK(gw[i * 3 + c] == doctest::Approx(delta[c] * x[i]));
    const auto gx = fc_backward_input<double>(delta, p);
    for (int i = 0; i < 5; ++i) {
        double want = 0.0;
        for (int c = 0; c < 3; ++c) want += delta[c] * p.weights[i * 3 + c];
        CHECK(gx[i] == doctest::Approx(want));
    }
    // Zero activations: weight gradients vanish, bias gradients do not.
    const std::vector<double> zeros(5, 0.0);
    gw.fill(0.0);
    fc_weight_grad<double>(delta, zeros, gw);
    for (const double v : gw.values()) CHECK(v == 0.0);
}

TEST_CASE("norm backward under stop-gradient divides by the stddev") {
    Rng rng(6);
    const auto x = random_tensor({4, 4, 2, 1}, rng, -2, 3);
    const auto fwd = norm_forward(x);
    const auto g = random_tensor(x.shape(), rng);
    const auto dx = norm_backward(g, x, fwd.mean, fwd.stddev, NormGrad::stop_gradient);
    for (int m = 0; m < 2; ++m)
        for (int i = 0; i < 16; ++i) {
            const std::size_t k = static_cast<std::size_t>(m) * 16 + i;
            CHECK(dx[k] == doctest::Approx(g[k] / (fwd.stddev[m] + kNormEpsilon)));
        }
    // The exact derivative is orthogonal to constant and linear shifts.
    const auto ex = norm_backward(g, x, fwd.mean, fwd.stddev, NormGrad::exact);
    for (int m = 0; m < 2; ++m) {
        double s = 0.0;
        for (int i = 0; i < 16; ++i) s += ex[static_cast<std::size_t>(m) * 16 + i];
        CHECK(std::abs(s) < 1e-10);
    }
}

TEST_CASE("a perfectly fitted sample produces zero gradients under mse") {
    Rng rng(1);
    auto p = make_preset("tiny", 3, ActivationKind::tanh());
    p.specs.back().activation = ActivationKind::identity();
    auto model = NetworkModel<double>::build(p.input, p.specs, rng);
    for (auto& l : model.layers()) {
        if (l.spec.kind == LayerKind::fc) l.params.weights.fill(0.0);
    }
    // With zero fc weights the scores equal the biases; set them to the target.
    auto& fc = model.layers().back();
    fc.params.biases[0] = 0.0;
    fc.params.biases[1] = 1.0;
    fc.params.biases[2] = 0.0;
    Tensor<double> x(p.input);
    for (auto& v : x.values()) v = rng.uniform();
    const auto cache = forward(model, x);
    auto g = GradientSet::zeros_like(model);
    const double loss = backward<double>(model, cache, one_hot<double>(1, 3), {Loss::mse, NormGrad::exact}, g);
    CHECK(loss == 0.0);
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        for (const double v : g.weights[l].values()) CHECK(v == 0.0);
        for (const double v : g.biases[l].values()) CHECK(v == 0.0);
    }
}

TEST_CASE("batch gradient is the sum of single-clip gradients") {
    Rng rng(2);
    const auto p = make_preset("tiny", 3);
    const auto model = NetworkModel<double>::build(p.input, p.specs, rng);
    MovingBarOptions mb;
    mb.per_class = 1;
    const auto clips = make_moving_bar_clips(mb);
    auto both = GradientSet::zeros_like(model);
    (void)batch_gradient<double>(model, std::span<const Clip>(clips).first(2), {}, both);
    auto a = GradientSet::zeros_like(model);
    auto b = GradientSet::zeros_like(model);
    (void)batch_gradient<double>(model, std::span<const Clip>(clips).subspan(0, 1), {}, a);
    (void)batch_gradient<double>(model, std::span<const Clip>(clips).subspan(1, 1), {}, b);
    a.add(b);
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        for (std::size_t k = 0; k < a.weights[l].size(); ++k)
            CHECK(both.weights[l][k] == doctest::Approx(a.weights[l][k]).epsilon(1e-12));
}

TEST_CASE("sgd step moves against the gradient") {
    Rng rng(3);
    const auto p = make_preset("tiny", 3);
    auto model = NetworkModel<double>::build(p.input, p.specs, rng);
    const auto before = model.layers()[0].params.weights[7];
    auto g = GradientSet::zeros_like(model);
    g.weights[0][7] = 2.0;
    sgd_update(model, g, 0.25);
    CHECK(model.layers()[0].params.weights[7] == doctest::Approx(before - 0.5));
}

TEST_CASE("learning-rate schedule") {
    const auto ar = TrainConfig::ar();
    for (int e = 0; e < 10; ++e) CHECK(lr_at_epoch(ar, e) == 0.00015);
    CHECK(lr_at_epoch(ar, 10) == 0.000135);
    CHECK(lr_at_epoch(ar, 19) == 0.000135);
    CHECK(lr_at_epoch(ar, 20) == 0.0001215);
    const auto dsr = TrainConfig::dsr();
    CHECK(lr_at_epoch(dsr, 0) == 0.000015);
    CHECK(lr_at_epoch(dsr, 3) == 0.000015);
    CHECK(lr_at_epoch(dsr, 4) == 0.0000135);
    CHECK(ar.batch == 200);
    CHECK(dsr.batch == 100);
    CHECK_THROWS((void)lr_at_epoch(ar, -1));
}

TEST_CASE("serial training is reproducible and writes one metrics row per epoch") {
    MovingBarOptions mb;
    mb.per_class = 4;
    const auto clips = make_moving_bar_clips(mb);
    auto run = [&] {
        Rng rng(7);
        const auto p = make_preset("tiny", 3);
        auto model = NetworkModel<float>::build(p.input, p.specs, rng);
        auto cfg = TrainConfig::ar();
        cfg.lr0 = 0.0015;
        cfg.batch = 4;
        cfg.max_epochs = 3;
        cfg.patience = 0;
        const auto res = train(model, clips, {}, cfg);
        std::ostringstream os;
        write_metrics_header(os);
        for (const auto& m : res.history) write_metrics_row(os, m);
        return std::make_pair(os.str(), model.layers()[0].params.weights);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK(std::count(a.first.begin(), a.first.end(), '\n') == 4);
}
