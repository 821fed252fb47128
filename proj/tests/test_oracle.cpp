#include "doctest.h"

#include "pyranet/oracle.hpp"

#include <sstream>

using namespace pyranet;

TEST_CASE("gradient suite passes with the default options") {
    const auto reports = oracle::run_suite({});
    std::ostringstream table;
    oracle::write_report_table(table, reports);
    INFO(table.str());
    CHECK(oracle::all_passed(reports));
    for (const auto& r : reports) {
        CHECK(r.sampled > 0);
        CHECK(r.max_rel_err < 1e-4);
    }
}

TEST_CASE("the suite covers every layer type and the composed network") {
    const auto reports = oracle::run_suite({});
    std::vector<std::string> names;
    for (const auto& r : reports) names.push_back(r.layer);
    for (const char* want : {"corr", "pool", "norm", "fc", "output", "lrelu", "net:3DCORR1", "net:3DPOOL3",
                             "net:3DCORR5", "net:FC7"}) {
        CHECK(std::find(names.begin(), names.end(), want) != names.end());
    }
}

TEST_CASE("a broken gradient is caught") {
    for (const LayerKind kind : {LayerKind::corr3d, LayerKind::pool3d, LayerKind::fc}) {
        oracle::SuiteOptions o;
        o.mutate = [kind](LayerKind k, Tensor<double>& g) {
            if (k != kind) return;
            // Swap two entries, as an off-by-one index would.
            for (std::size_t i = 0; i + 1 < g.size(); i += 2) std::swap(g[i], g[i + 1]);
        };
        const auto reports = oracle::run_suite(o);
        CHECK_FALSE(oracle::all_passed(reports));
    }
    oracle::SuiteOptions scaled;
    scaled.mutate = [](LayerKind k, Tensor<double>& g) {
        if (k != LayerKind::corr3d) return;
        for (auto& v : g.values()) v *= 1.01;
    };
    CHECK_FALSE(oracle::all_passed(oracle::run_suite(scaled)));
}

TEST_CASE("gradients agree at a smaller step across seeds and modes") {
    // h=1e-4 leaves truncation error far below tolerance, so this sweep
    // separates gradient bugs from finite-difference noise.
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        for (const NormGrad mode : {NormGrad::stop_gradient, NormGrad::exact}) {
            for (const Loss loss : {Loss::ce, Loss::mse}) {
                oracle::SuiteOptions o;
                o.seed = seed;
                o.norm = mode;
                o.loss = loss;
                o.h = 1e-4;
                const auto reports = oracle::run_suite(o);
                std::ostringstream table;
                oracle::write_report_table(table, reports);
                INFO("seed " << seed << "\n" << table.str());
                CHECK(oracle::all_passed(reports));
            }
        }
    }
}

TEST_CASE("report csv") {
    const auto reports = oracle::run_suite({});
    std::ostringstream csv;
    oracle::write_report_csv(csv, reports);
    const auto text = csv.str();
    CHECK(text.rfind("layer,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(reports.size()) + 1);
}

TEST_CASE("naive forward agrees with the production forward") {
    Rng rng(4);
    const auto mini = oracle::mini_network("tiny");
    const auto model = NetworkModel<double>::build(mini.input, mini.specs, rng);
    Tensor<double> x(mini.input);
    for (auto& v : x.values()) v = rng.uniform();
    const auto t = one_hot<double>(1, model.classes());
    const auto trace = oracle::naive_forward(model, x, t, Loss::ce);
    const auto cache = forward(model, x);
    for (std::size_t l = 0; l < cache.layers.size(); ++l) {
        const auto& a = trace.outputs[l];
        const auto& b = cache.layers[l].out;
        REQUIRE(a.shape() == b.shape());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    }
}
