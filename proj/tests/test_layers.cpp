#include "doctest.h"

#include "pyranet/oracle.hpp"

#include <cmath>
#include <numeric>

using namespace pyranet;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(s);
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

}  // namespace

TEST_CASE("corr3d forward equals the naive loops exactly") {
    Rng rng(11);
    for (int n = 0; n < 50; ++n) {
        const int r = 1 + static_cast<int>(rng.below(3));
        const int o = static_cast<int>(rng.below(r));
        const int depth = 1 + static_cast<int>(rng.below(3));
        const int stride = 1 + static_cast<int>(rng.below(2));
        const int sets = 1 + static_cast<int>(rng.below(3));
        const int in_sets = rng.below(2) ? 1 : sets;
        const Shape in{r + static_cast<int>(rng.below(9 - r)), r + static_cast<int>(rng.below(9 - r)),
                       depth + static_cast<int>(rng.below(6 - depth)), in_sets};
        const LayerSpec spec = LayerSpec::corr({r, o, depth, stride}, sets, ActivationKind::lrelu(0.02));
        const Shape out = layer_output_shape(spec, in);
        const auto x = random_tensor<float>(in, rng);
        Rng prng(n);
        auto p = init_params<float>(spec, in, out, prng);
        for (auto& b : p.biases.values()) b = static_cast<float>(rng.uniform(-0.3, 0.3));
        const auto fast = corr3d_forward(x, p, spec);
        const auto slow = oracle::naive_corr3d(x, p, spec);
        CHECK(fast.preact == slow.preact);
        CHECK(fast.out == slow.out);
    }
}

TEST_CASE("corr3d output neuron by hand") {
    // 3x3x2 input, r=2, O=1, D=2, one set: output (0,0,0) reads rows 0-1,
    // cols 0-1 of both frames.
    Tensor<double> x({3, 3, 2, 1});
    std::iota(x.raw().begin(), x.raw().end(), 1.0);
    const LayerSpec spec = LayerSpec::corr({2, 1, 2, 1}, 1, ActivationKind::identity());
    ParamSet<double> p{LayerKind::corr3d, Tensor<double>({3, 3, 2, 1}, 1.0), Tensor<double>({2, 2, 1, 1}, 0.5)};
    p.weights(0, 0, 1) = 2.0;
    const auto y = corr3d_forward(x, p, spec);
    CHECK(y.out.shape() == Shape{2, 2, 1, 1});
    // frame 0: 1+2+4+5 = 12; frame 1: 2*10 + 11 + 13 + 14 = 58; bias 0.5.
    CHECK(y.out(0, 0, 0) == 70.5);
    // (1,1): frame 0: 5+6+8+9 = 28; frame 1: 14+15+17+18 = 64.
    CHECK(y.out(1, 1, 0) == 92.5);
}

TEST_CASE("corr3d weights outside every window are unused") {
    // r=2, O=0 on a 5-wide input leaves column 4 and row 4 uncovered.
    Rng rng(2);
    const LayerSpec spec = LayerSpec::corr({2, 0, 1, 1}, 1, ActivationKind::identity());
    const auto x = random_tensor<double>({5, 5, 1, 1}, rng);
    ParamSet<double> p{LayerKind::corr3d, random_tensor<double>({5, 5, 1, 1}, rng), Tensor<double>({2, 2, 1, 1})};
    const auto before = corr3d_forward(x, p, spec).out;
    p.weights(4, 4, 0) = 100.0;
    p.weights(0, 4, 0) = -3.0;
    CHECK(corr3d_forward(x, p, spec).out == before);
}

TEST_CASE("pool forward picks the weighted window maximum") {
    Rng rng(4);
    const LayerSpec spec = LayerSpec::pool({2, 0, 3, 1}, ActivationKind::tanh());
    const Shape in{6, 4, 5, 2};
    const auto x = random_tensor<double>(in, rng);
    const Shape out = layer_output_shape(spec, in);
    CHECK(out == Shape{3, 2, 3, 2});
    ParamSet<double> p{LayerKind::pool3d, random_tensor<double>({3, 2, 1, 1}, rng),
                       random_tensor<double>({1, 1, 3, 2}, rng)};
    const auto y = pool3d_forward(x, p, spec);
    const auto win = oracle::naive_pool_argmax(x, spec);
    REQUIRE(win == y.argmax.flat);
    for (int s = 0; s < 2; ++s)
        for (int z = 0; z < 3; ++z)
            for (int u = 0; u < 2; ++u)
                for (int v = 0; v < 3; ++v) {
                    double best = -1e9;
                    for (int i = 2 * u; i < 2 * u + 2; ++i)
                        for (int j = 2 * v; j < 2 * v + 2; ++j)
                            for (int d = 0; d < 3; ++d) best = std::max(best, x(i, j, z + d, s));
                    CHECK(y.maxval(u, v, z, s) == best);
                    CHECK(y.out(u, v, z, s) ==
                          doctest::Approx(std::tanh(p.weights(u, v, 0) * best + p.biases(0, 0, z, s))));
                }
}

TEST_CASE("pool ties resolve to the first maximum in row, column, depth order") {
    const LayerSpec spec = LayerSpec::pool({2, 0, 2, 1}, ActivationKind::identity());
    Tensor<double> x({2, 2, 2, 1}, 1.0);
    CHECK(oracle::naive_pool_argmax(x, spec)[0] == x.index(0, 0, 0, 0));
    ParamSet<double> p{LayerKind::pool3d, Tensor<double>({1, 1, 1, 1}, 1.0), Tensor<double>({1, 1, 1, 1})};
    CHECK(pool3d_forward(x, p, spec).argmax.flat[0] == x.index(0, 0, 0, 0));
    // A later tie must not displace an earlier winner; depth is scanned
    // innermost, so (0,0,1) precedes (0,1,0).
    x.fill(0.0);
    x(0, 1, 0) = 2.0;
    x(0, 0, 1) = 2.0;
    CHECK(pool3d_forward(x, p, spec).argmax.flat[0] == x.index(0, 0, 1, 0));
}

TEST_CASE("norm gives zero mean and unit variance per map and set") {
    Rng rng(9);
    const auto x = random_tensor<double>({7, 5, 3, 2}, rng, -4.0, 9.0);
    const auto y = norm_forward(x);
    for (int s = 0; s < 2; ++s)
        for (int m = 0; m < 3; ++m) {
            const auto pl = y.out.plane(m, s);
            const double mu = std::accumulate(pl.begin(), pl.end(), 0.0) / static_cast<double>(pl.size());
            double var = 0.0;
            for (const double v : pl) var += (v - mu) * (v - mu);
            CHECK(std::abs(mu) < 1e-6);
            CHECK(std::abs(std::sqrt(var / static_cast<double>(pl.size())) - 1.0) < 1e-4);
        }
    const Tensor<double> c({3, 3, 1, 1}, 2.5);
    const auto flat = norm_forward(c);
    for (const double v : flat.out.values()) CHECK(v == 0.0);
}

TEST_CASE("fc forward uses w[i, c] at i * C + c") {
    const LayerSpec spec = LayerSpec::fc(2, ActivationKind::identity());
    ParamSet<double> p{LayerKind::fc, Tensor<double>({2, 3, 1, 1}, std::vector<double>{1, 2, 3, 4, 5, 6}),
                       Tensor<double>({2, 1, 1, 1}, std::vector<double>{0.5, -0.5})};
    const std::vector<double> x{1, 0, -1};
    const auto y = fc_forward<double>(x, p, spec);
    CHECK(y.out[0] == 1 - 5 + 0.5);
    CHECK(y.out[1] == 2 - 6 - 0.5);
}

TEST_CASE("softmax is stable and normalized") {
    const std::vector<double> s{1000.0, 1001.0, 999.0};
    const auto p = softmax<double>(s);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(std::exp(1.0) / (1 + std::exp(1.0) + std::exp(-1.0))));
}

TEST_CASE("activations") {
    CHECK(activation_apply(ActivationKind::lrelu(0.01), -2.0) == doctest::Approx(-0.02));
    CHECK(activation_deriv(ActivationKind::lrelu(0.01), -2.0) == 0.01);
    CHECK(activation_deriv(ActivationKind::lrelu(0.01), 0.0) == 0.01);
    const double h = 1e-4;
    const auto sig = ActivationKind::sigmoid();
    const double fd = (activation_apply(sig, 0.3 + h) - activation_apply(sig, 0.3 - h)) / (2 * h);
    CHECK(std::abs(fd - activation_deriv(sig, 0.3)) / std::abs(fd) < 1e-6);
    CHECK(parse_activation("lrelu") == ActivationKind::lrelu(0.01));
    CHECK(parse_activation("tanh") == ActivationKind::tanh());
    CHECK_THROWS((void)parse_activation("relu6"));
}

TEST_CASE("network forward rejects a wrong input shape") {
    Rng rng(1);
    const auto p = make_preset("tiny", 3);
    const auto m = NetworkModel<float>::build(p.input, p.specs, rng);
    CHECK_THROWS_AS((void)forward(m, Tensor<float>({16, 12, 12, 1})), shape_error);
    const auto c = forward(m, Tensor<float>(p.input, 0.3f));
    CHECK(c.posteriors.size() == 3);
}
