#pragma once

#include "pyranet/network.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pyranet {

// F: every set concatenated. FM: per-set vectors averaged elementwise.
enum class FusionMode { global, mean };

[[nodiscard]] std::string fusion_mode_tag(FusionMode mode);  // "F" / "FM"
[[nodiscard]] FusionMode parse_fusion_mode(const std::string& tag);

struct FusedVector {
    std::vector<float> values;
    std::optional<int> label;
};

// Flatten order is set-major, then map, then row, then column, i.e. the
// storage order of the stack. Length h*w*M*S.
template <typename T>
[[nodiscard]] FusedVector fuse_global(const Tensor<T>& stack);

// Elementwise mean over sets of the per-set flattened blocks. Length h*w*M.
template <typename T>
[[nodiscard]] FusedVector fuse_mean(const Tensor<T>& stack);

[[nodiscard]] std::size_t fused_length(const Shape& stack, FusionMode mode);

// Runs the network and fuses the output of its last normalization layer.
[[nodiscard]] std::vector<FusedVector> extract_features(const NetworkModel<float>& model,
                                                        const std::vector<Clip>& clips,
                                                        FusionMode mode);

// Feature file, version 1:
//   3DPNF <version> <F|FM> <length>
//   <label>,<v1>,<v2>,...        one line per clip, %.9g decimals
// A clip without a label is written as -1.
inline constexpr int kFeatureFileVersion = 1;

struct FeatureFile {
    FusionMode mode = FusionMode::global;
    std::size_t length = 0;
    std::vector<FusedVector> records;
};

void write_feature_file(const std::filesystem::path& path, const FeatureFile& file);
[[nodiscard]] FeatureFile read_feature_file(const std::filesystem::path& path);

}  // namespace pyranet
