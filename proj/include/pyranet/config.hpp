#pragma once

#include "pyranet/clip_io.hpp"
#include "pyranet/fusion.hpp"
#include "pyranet/svm.hpp"
#include "pyranet/train.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace pyranet {

// Invalid configuration. line() is 1-based, or 0 when the problem is not tied
// to a single line.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& origin, int line, const std::string& msg)
        : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg),
          line_(line) {}
    [[nodiscard]] int line() const { return line_; }

private:
    int line_;
};

// A per-layer edit in [model], e.g. `3DCORR5.rf = 3`.
struct LayerOverride {
    std::string layer;
    std::string key;
    std::string value;
    int line = 0;
};

struct DataConfig {
    std::filesystem::path manifest;
    std::filesystem::path val_manifest;
    std::filesystem::path test_manifest;
    SamplingPolicy sampling;
    bool split = false;  // split `manifest` instead of reading separate lists
    SplitOptions split_options;
};

struct FusionConfig {
    FusionMode mode = FusionMode::global;
    SvmParams svm;
};

struct RunConfig {
    std::string origin = "<config>";
    std::uint64_t seed = 1;
    std::filesystem::path out = "runs";
    std::string preset = "ar";
    int classes = 0;  // 0: taken from the manifest
    ActivationKind hidden = ActivationKind::lrelu(0.01);
    std::vector<LayerOverride> overrides;
    TrainConfig train;
    DataConfig data;
    FusionConfig fusion;

    // Preset plus overrides for `classes` outputs. Throws config_error naming
    // the override line or the layer that breaks the shape chain.
    [[nodiscard]] NetworkPreset model(int classes) const;
};

// Grammar, one statement per line:
//   line    := blank | comment | section | assign
//   comment := ('#' | ';') text
//   section := '[' name ']'             name in run, model, train, data, fusion
//   assign  := key '=' value [comment]  whitespace around key and value ignored
// Keys before the first section belong to [run]. Unknown sections or keys,
// repeated keys and malformed values are errors. Relative paths in [run] and
// [data] resolve against the config file's directory.
[[nodiscard]] RunConfig parse_config(const std::string& text, const std::string& origin = "<config>",
                                     const std::filesystem::path& base = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

// Defaults for a preset with no config file.
[[nodiscard]] RunConfig default_config(const std::string& preset);

}  // namespace pyranet
