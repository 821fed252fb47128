#include "pyranet/fusion.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pyranet {

std::string fusion_mode_tag(FusionMode mode) { return mode == FusionMode::global ? "F" : "FM"; }

FusionMode parse_fusion_mode(const std::string& tag) {
    if (tag == "F" || tag == "f" || tag == "global") return FusionMode::global;
    if (tag == "FM" || tag == "fm" || tag == "F_M" || tag == "mean") return FusionMode::mean;
    throw std::invalid_argument("unknown fusion mode '" + tag + "' (expected F or FM)");
}

template <typename T>
FusedVector fuse_global(const Tensor<T>& stack) {
    FusedVector f;
    f.values.assign(stack.values().begin(), stack.values().end());
    return f;
}

template <typename T>
FusedVector fuse_mean(const Tensor<T>& stack) {
    const Shape sh = stack.shape();
    if (sh.sets < 1) throw shape_error("fuse_mean needs at least one weight set");
    const std::size_t block = sh.map_size() * sh.maps;
    FusedVector f;
    f.values.resize(block);
    for (std::size_t k = 0; k < block; ++k) {
        double acc = 0.0;
        for (int s = 0; s < sh.sets; ++s) acc += static_cast<double>(stack[s * block + k]);
        f.values[k] = static_cast<float>(acc / sh.sets);
    }
    return f;
}

template FusedVector fuse_global(const Tensor<float>&);
template FusedVector fuse_global(const Tensor<double>&);
template FusedVector fuse_mean(const Tensor<float>&);
template FusedVector fuse_mean(const Tensor<double>&);

std::size_t fused_length(const Shape& stack, FusionMode mode) {
    return mode == FusionMode::global ? stack.size() : stack.map_size() * stack.maps;
}

std::vector<FusedVector> extract_features(const NetworkModel<float>& model,
                                          const std::vector<Clip>& clips, FusionMode mode) {
    const int tap = model.last_norm_index();
    if (tap < 0) throw shape_error("extract_features: the model has no normalization layer");
    std::vector<FusedVector> out(clips.size());
    const auto n = static_cast<std::ptrdiff_t>(clips.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto cache = forward(model, clips[k].to_tensor<float>());
        const auto& stack = cache.layers[tap].out;
        out[k] = mode == FusionMode::global ? fuse_global(stack) : fuse_mean(stack);
        out[k].label = clips[k].label;
    }
    return out;
}

void write_feature_file(const std::filesystem::path& path, const FeatureFile& file) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << "3DPNF " << kFeatureFileVersion << ' ' << fusion_mode_tag(file.mode) << ' '
       << file.length << '\n';
    char buf[32];
    for (const auto& rec : file.records) {
        if (rec.values.size() != file.length) {
            throw shape_error("feature record length " + std::to_string(rec.values.size()) +
                              " differs from header length " + std::to_string(file.length));
        }
        os << rec.label.value_or(-1);
        for (const float v : rec.values) {
            std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(v));
            os << buf;
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("write to " + path.string() + " failed");
}

FeatureFile read_feature_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open feature file " + path.string());
    std::string magic, mode;
    int version = 0;
    FeatureFile file;
    std::string header;
    std::getline(is, header);
    std::istringstream hs(header);
    if (!(hs >> magic >> version >> mode >> file.length) || magic != "3DPNF") {
        throw std::runtime_error(path.string() + ": not a feature file (bad header)");
    }
    if (version != kFeatureFileVersion) {
        throw std::runtime_error(path.string() + ": unsupported feature file version " +
                                 std::to_string(version));
    }
    file.mode = parse_fusion_mode(mode);
    std::string line;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        FusedVector rec;
        rec.values.reserve(file.length);
        const char* p = line.c_str();
        char* end = nullptr;
        const long label = std::strtol(p, &end, 10);
        if (end == p) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad label");
        if (label >= 0) rec.label = static_cast<int>(label);
        p = end;
        while (*p == ',') {
            ++p;
            const float v = std::strtof(p, &end);
            if (end == p) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad value");
            rec.values.push_back(v);
            p = end;
        }
        if (rec.values.size() != file.length) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(file.length) + " values, found " +
                                     std::to_string(rec.values.size()));
        }
        file.records.push_back(std::move(rec));
    }
    return file;
}

}  // namespace pyranet
