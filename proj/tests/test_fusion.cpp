#include "doctest.h"

#include "pyranet/fusion.hpp"
#include "pyranet/svm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace pyranet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "pyranet_test_fusion";
    fs::create_directories(dir);
    return dir / name;
}

// Two Gaussian blobs per class along separate axes.
std::vector<FusedVector> blobs(int classes, int per_class, std::size_t dim, double spread, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FusedVector> out;
    for (int c = 0; c < classes; ++c) {
        for (int n = 0; n < per_class; ++n) {
            FusedVector f;
            f.values.resize(dim);
            for (std::size_t k = 0; k < dim; ++k) f.values[k] = static_cast<float>(spread * rng.normal());
            f.values[static_cast<std::size_t>(c) % dim] += 2.0f;
            f.label = c;
            out.push_back(std::move(f));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("fused lengths for both presets") {
    CHECK(fused_length({27, 19, 7, 3}, FusionMode::global) == 10773);
    CHECK(fused_length({27, 19, 7, 3}, FusionMode::mean) == 3591);
    CHECK(fused_length({35, 45, 7, 3}, FusionMode::global) == 33075);
    CHECK(fused_length({35, 45, 7, 3}, FusionMode::mean) == 11025);
}

TEST_CASE("fuse_mean is the blockwise mean of fuse_global") {
    Rng rng(4);
    Tensor<float> t({5, 3, 4, 3});
    for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-3, 3));
    const auto g = fuse_global(t);
    const auto m = fuse_mean(t);
    REQUIRE(g.values.size() == t.size());
    REQUIRE(m.values.size() == 60);
    CHECK(std::equal(g.values.begin(), g.values.end(), t.values().begin()));
    for (std::size_t k = 0; k < 60; ++k) {
        const double s = static_cast<double>(g.values[k]) + g.values[60 + k] + g.values[120 + k];
        CHECK(m.values[k] == static_cast<float>(s / 3.0));
    }
    // A single set fuses to itself under both modes.
    Tensor<float> one({2, 2, 1, 1}, std::vector<float>{1, 2, 3, 4});
    CHECK(fuse_mean(one).values == fuse_global(one).values);
}

TEST_CASE("fusion mode tags") {
    CHECK(fusion_mode_tag(FusionMode::global) == "F");
    CHECK(fusion_mode_tag(FusionMode::mean) == "FM");
    CHECK(parse_fusion_mode("FM") == FusionMode::mean);
    CHECK_THROWS((void)parse_fusion_mode("XX"));
}

TEST_CASE("feature file round trip") {
    FeatureFile f;
    f.mode = FusionMode::mean;
    f.length = 3;
    f.records.push_back({{0.1f, -2.5f, 3e-7f}, 2});
    f.records.push_back({{1.0f, 0.0f, -1.0f}, std::nullopt});
    const auto path = scratch("features.txt");
    write_feature_file(path, f);
    const auto back = read_feature_file(path);
    CHECK(back.mode == FusionMode::mean);
    CHECK(back.length == 3);
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[0].values == f.records[0].values);
    CHECK(back.records[0].label == 2);
    CHECK_FALSE(back.records[1].label.has_value());

    f.records[1].values.push_back(9.0f);
    CHECK_THROWS(write_feature_file(path, f));
}

// Independent reference: projected gradient ascent on the same dual with an
// explicit Gram matrix of the bias-augmented inputs.
TEST_CASE("binary svm matches a Gram-matrix dual solver") {
    const auto data = blobs(2, 15, 3, 0.8, 17);
    std::vector<std::vector<float>> x;
    std::vector<int> y;
    for (const auto& f : data) {
        x.push_back(f.values);
        y.push_back(*f.label == 0 ? 1 : -1);
    }
    const double C = 0.5;
    SvmParams params;
    params.c_reg = C;
    params.tol = 1e-9;
    params.max_epochs = 100000;
    const auto m = train_binary_svm(x, y, params);
    CHECK(m.converged);

    const std::size_t n = x.size();
    std::vector<std::vector<double>> q(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double k = 1.0;
            for (std::size_t d = 0; d < 3; ++d) k += static_cast<double>(x[i][d]) * x[j][d];
            q[i][j] = y[i] * y[j] * k;
        }
    double lmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(q[i][j]);
        lmax = std::max(lmax, row);
    }
    std::vector<double> a(n, 0.0);
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> grad(n, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) grad[i] -= q[i][j] * a[j];
        for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(a[i] + grad[i] / lmax, 0.0, C);
    }
    std::vector<double> w(3, 0.0);
    double b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < 3; ++d) w[d] += a[i] * y[i] * x[i][d];
        b += a[i] * y[i];
    }
    for (std::size_t d = 0; d < 3; ++d) CHECK(m.w[d] == doctest::Approx(w[d]).epsilon(1e-4));
    CHECK(m.b == doctest::Approx(b).epsilon(1e-4));
    const double p_ref = svm_primal_objective(x, y, w, b, C);
    CHECK(m.primal == doctest::Approx(p_ref).epsilon(1e-6));
    CHECK(m.primal - m.dual <= 1e-9);
}

TEST_CASE("one-vs-all svm separates well-spaced classes") {
    const auto train = blobs(4, 20, 6, 0.3, 2);
    const auto test = blobs(4, 10, 6, 0.3, 3);
    const auto model = svm_train(train, {});
    CHECK(model.classes == 4);
    CHECK(model.machines.size() == 4);
    CHECK(svm_accuracy(model, train) == 1.0);
    CHECK(svm_accuracy(model, test) >= 0.95);
}

TEST_CASE("svm training is reproducible and its model file round trips") {
    const auto data = blobs(3, 10, 4, 1.0, 8);
    const auto a = svm_train(data, {});
    const auto b = svm_train(data, {});
    for (int c = 0; c < 3; ++c) CHECK(a.machines[c].w == b.machines[c].w);
    const auto path = scratch("model.svm");
    write_svm_model(path, a);
    const auto back = read_svm_model(path);
    CHECK(back.classes == 3);
    CHECK(back.dim == 4);
    for (int c = 0; c < 3; ++c) {
        CHECK(back.machines[c].w == a.machines[c].w);
        CHECK(back.machines[c].b == a.machines[c].b);
    }
    for (const auto& f : data) CHECK(svm_predict(back, f.values) == svm_predict(a, f.values));
}

TEST_CASE("svm input errors") {
    auto one = blobs(1, 5, 2, 1.0, 1);
    CHECK_THROWS((void)svm_train(one, {}));
    auto data = blobs(2, 5, 2, 1.0, 1);
    data[3].values.push_back(1.0f);
    CHECK_THROWS((void)svm_train(data, {}));
    data = blobs(2, 5, 2, 1.0, 1);
    data[0].label.reset();
    CHECK_THROWS((void)svm_train(data, {}));
}

TEST_CASE("svm ties go to the lowest class") {
    SvmModel m;
    m.classes = 3;
    m.dim = 1;
    m.machines.resize(3);
    for (auto& bm : m.machines) {
        bm.w = {1.0};
        bm.b = 0.0;
    }
    const std::vector<float> x{0.5f};
    CHECK(svm_predict(m, x) == 0);
}
