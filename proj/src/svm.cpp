#include "pyranet/svm.hpp"

#include "pyranet/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pyranet {

double BinarySvm::decision(std::span<const float> x) const {
    double acc = b;
    for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * static_cast<double>(x[k]);
    return acc;
}

double svm_primal_objective(const std::vector<std::vector<float>>& x, std::span<const int> labels,
                            std::span<const double> w, double b, double c_reg) {
    double reg = b * b;
    for (const double v : w) reg += v * v;
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = b;
        for (std::size_t k = 0; k < w.size(); ++k) f += w[k] * static_cast<double>(x[i][k]);
        hinge += std::max(0.0, 1.0 - labels[i] * f);
    }
    return 0.5 * reg + c_reg * hinge;
}

BinarySvm train_binary_svm(const std::vector<std::vector<float>>& x, std::span<const int> labels,
                           const SvmParams& params) {
    if (x.size() != labels.size()) throw std::invalid_argument("svm: feature/label count mismatch");
    if (x.empty()) throw std::invalid_argument("svm: no training vectors");
    if (!(params.c_reg > 0.0) || !(params.tol > 0.0)) {
        throw std::invalid_argument("svm: C and tol must be > 0");
    }
    const std::size_t n = x.size();
    const std::size_t dim = x.front().size();

    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i].size() != dim) throw std::invalid_argument("svm: inconsistent vector lengths");
        if (labels[i] != 1 && labels[i] != -1) throw std::invalid_argument("svm: labels must be +-1");
        double q = 1.0;  // augmented bias feature
        for (const float v : x[i]) q += static_cast<double>(v) * v;
        qii[i] = q;
    }

    BinarySvm m;
    m.w.assign(dim, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(params.seed);
    const double C = params.c_reg;

    for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (const std::size_t i : order) {
            const double y = labels[i];
            double f = m.b;
            for (std::size_t k = 0; k < dim; ++k) f += m.w[k] * static_cast<double>(x[i][k]);
            const double grad = y * f - 1.0;
            const double a_old = alpha[i];
            const double a_new = std::clamp(a_old - grad / qii[i], 0.0, C);
            const double step = (a_new - a_old) * y;
            if (step != 0.0) {
                for (std::size_t k = 0; k < dim; ++k) m.w[k] += step * static_cast<double>(x[i][k]);
                m.b += step;
                alpha[i] = a_new;
            }
        }
        m.epochs = epoch + 1;
        double norm2 = m.b * m.b;
        for (const double v : m.w) norm2 += v * v;
        m.dual = std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * norm2;
        m.primal = svm_primal_objective(x, labels, m.w, m.b, C);
        if (m.primal - m.dual <= params.tol) {
            m.converged = true;
            break;
        }
    }
    return m;
}

std::vector<double> SvmModel::decision_values(std::span<const float> x) const {
    if (x.size() != dim) {
        throw std::invalid_argument("svm: feature length " + std::to_string(x.size()) +
                                    " does not match model length " + std::to_string(dim));
    }
    std::vector<double> out(machines.size());
    for (std::size_t c = 0; c < machines.size(); ++c) out[c] = machines[c].decision(x);
    return out;
}

SvmModel svm_train(const std::vector<FusedVector>& features, const SvmParams& params) {
    if (features.empty()) throw std::invalid_argument("svm_train: no feature vectors");
    const std::size_t dim = features.front().values.size();
    int classes = 0;
    std::vector<std::vector<float>> x;
    std::vector<int> y;
    for (const auto& f : features) {
        if (!f.label) throw std::invalid_argument("svm_train: unlabelled feature vector");
        if (f.values.size() != dim) throw std::invalid_argument("svm_train: inconsistent vector lengths");
        if (*f.label < 0) throw std::invalid_argument("svm_train: negative label");
        classes = std::max(classes, *f.label + 1);
        x.push_back(f.values);
        y.push_back(*f.label);
    }
    std::vector<int> seen(classes, 0);
    for (const int l : y) seen[l] = 1;
    if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
        throw std::invalid_argument("svm_train: need at least two classes");
    }

    SvmModel model;
    model.classes = classes;
    model.dim = dim;
    model.params = params;
    model.machines.resize(classes);
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < classes; ++c) {
        std::vector<int> yc(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) yc[i] = y[i] == c ? 1 : -1;
        SvmParams p = params;
        p.seed = params.seed + static_cast<std::uint64_t>(c);
        model.machines[c] = train_binary_svm(x, yc, p);
    }
    return model;
}

int svm_predict(const SvmModel& model, std::span<const float> x) {
    const auto d = model.decision_values(x);
    return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

double svm_accuracy(const SvmModel& model, const std::vector<FusedVector>& features) {
    int total = 0;
    int hits = 0;
    for (const auto& f : features) {
        if (!f.label) continue;
        ++total;
        if (svm_predict(model, f.values) == *f.label) ++hits;
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

void write_svm_model(const std::filesystem::path& path, const SvmModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g %.17g", model.params.c_reg, model.params.tol);
    os << "3DPNSVM 1 " << model.classes << ' ' << model.dim << ' ' << buf << '\n';
    for (const auto& m : model.machines) {
        std::snprintf(buf, sizeof buf, "%.17g", m.b);
        os << buf;
        for (const double v : m.w) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        }
        os << '\n';
    }
}

SvmModel read_svm_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open svm model " + path.string());
    std::string magic;
    int version = 0;
    SvmModel model;
    if (!(is >> magic >> version >> model.classes >> model.dim >> model.params.c_reg >>
          model.params.tol) ||
        magic != "3DPNSVM" || version != 1) {
        throw std::runtime_error(path.string() + ": not a version-1 svm model");
    }
    std::string line;
    std::getline(is, line);
    for (int c = 0; c < model.classes; ++c) {
        if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": truncated model");
        BinarySvm m;
        const char* p = line.c_str();
        char* end = nullptr;
        m.b = std::strtod(p, &end);
        p = end;
        while (*p == ',') {
            m.w.push_back(std::strtod(p + 1, &end));
            p = end;
        }
        if (m.w.size() != model.dim) throw std::runtime_error(path.string() + ": bad weight row");
        model.machines.push_back(std::move(m));
    }
    return model;
}

}  // namespace pyranet
