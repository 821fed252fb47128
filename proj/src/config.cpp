#include "pyranet/config.hpp"

#include "pyranet/clip_io.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace pyranet {

namespace {

struct Item {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class Parser {
public:
    Parser(std::string origin, fs::path base) : origin_(std::move(origin)), base_(std::move(base)) {}

    [[noreturn]] void fail(int line, const std::string& msg) const { throw config_error(origin_, line, msg); }

    long long integer(const Item& it, long long lo, long long hi) const {
        long long v = 0;
        const auto* end = it.value.data() + it.value.size();
        const auto [p, ec] = std::from_chars(it.value.data(), end, v);
        if (ec != std::errc{} || p != end) fail(it.line, it.key + ": expected an integer, got '" + it.value + "'");
        if (v < lo || v > hi) {
            fail(it.line, it.key + " = " + it.value + " is out of range [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
        }
        return v;
    }

    double real(const Item& it) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(it.value, &used);
            if (used == it.value.size() && std::isfinite(v)) return v;
        } catch (const std::exception&) {
        }
        fail(it.line, it.key + ": expected a number, got '" + it.value + "'");
    }

    bool boolean(const Item& it) const {
        if (it.value == "true" || it.value == "yes" || it.value == "on" || it.value == "1") return true;
        if (it.value == "false" || it.value == "no" || it.value == "off" || it.value == "0") return false;
        fail(it.line, it.key + ": expected true or false, got '" + it.value + "'");
    }

    fs::path path(const Item& it) const {
        if (it.value.empty()) fail(it.line, it.key + ": empty path");
        fs::path p = it.value;
        return p.is_relative() && !base_.empty() ? base_ / p : p;
    }

    template <typename F>
    auto guarded(const Item& it, F&& f) const {
        try {
            return f();
        } catch (const config_error&) {
            throw;
        } catch (const std::exception& e) {
            fail(it.line, it.key + ": " + e.what());
        }
    }

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    fs::path base_;
};

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"run", {"seed", "out"}},
        {"model", {"preset", "classes", "hidden_activation", "input"}},
        {"train",
         {"loss", "norm_grad", "lr0", "decay", "decay_every", "batch", "max_epochs", "patience",
          "deterministic"}},
        {"data",
         {"manifest", "val_manifest", "test_manifest", "sampling", "clip_len", "window", "hop", "overlap",
          "split", "train_ratio", "val_ratio", "test_subjects"}},
        {"fusion", {"mode", "svm_c", "svm_tol", "svm_max_epochs"}},
    };
    return keys;
}

const std::set<std::string> kLayerKeys = {"rf", "overlap", "depth", "temporal_stride", "sets", "activation"};

std::vector<Item> tokenize(const std::string& text, const Parser& ps) {
    std::vector<Item> items;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string raw;
    std::string section = "run";
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line[0] == '[') {
            if (line.back() != ']') ps.fail(lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_keys().count(section)) ps.fail(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) ps.fail(lineno, "expected 'key = value'");
        Item it{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
        if (const auto c = it.value.find_first_of("#;"); c != std::string::npos) it.value = trim(it.value.substr(0, c));
        if (it.key.empty()) ps.fail(lineno, "missing key");
        const auto dot = it.key.find('.');
        const bool layer_key = section == "model" && dot != std::string::npos;
        if (layer_key ? !kLayerKeys.count(it.key.substr(dot + 1)) : !known_keys().at(section).count(it.key)) {
            ps.fail(lineno, "unknown key '" + it.key + "' in [" + section + "]");
        }
        if (!seen.insert(section + "." + it.key).second) {
            ps.fail(lineno, "repeated key '" + it.key + "' in [" + section + "]");
        }
        items.push_back(std::move(it));
    }
    return items;
}

Shape parse_input(const Item& it, const Parser& ps) {
    Shape s{0, 0, 0, 1};
    if (std::sscanf(it.value.c_str(), "%dx%dx%d", &s.width, &s.height, &s.maps) != 3 || s.width < 1 ||
        s.height < 1 || s.maps < 1) {
        ps.fail(it.line, "input: expected WIDTHxHEIGHTxFRAMES, got '" + it.value + "'");
    }
    return s;
}

}  // namespace

NetworkPreset RunConfig::model(int n_classes) const {
    NetworkPreset p;
    try {
        p = make_preset(preset, n_classes, hidden);
    } catch (const std::exception& e) {
        throw config_error(origin, 0, e.what());
    }
    const auto names = layer_names(p.specs);
    for (const auto& ov : overrides) {
        if (ov.layer == "input") {
            Item it{"model", "input", ov.value, ov.line};
            p.input = parse_input(it, Parser(origin, {}));
            continue;
        }
        const auto pos = std::find(names.begin(), names.end(), ov.layer);
        if (pos == names.end()) throw config_error(origin, ov.line, "no layer named '" + ov.layer + "'");
        auto& spec = p.specs[pos - names.begin()];
        const Parser ps(origin, {});
        const Item it{"model", ov.layer + "." + ov.key, ov.value, ov.line};
        if (ov.key == "activation") {
            spec.activation = ps.guarded(it, [&] { return parse_activation(ov.value); });
            continue;
        }
        if (spec.kind == LayerKind::norm || spec.kind == LayerKind::fc) {
            throw config_error(origin, ov.line, ov.layer + " has no '" + ov.key + "' setting");
        }
        const int v = static_cast<int>(ps.integer(it, 0, 1 << 20));
        if (ov.key == "rf") spec.geom.rf = v;
        if (ov.key == "overlap") spec.geom.overlap = v;
        if (ov.key == "depth") spec.geom.depth = v;
        if (ov.key == "temporal_stride") spec.geom.temporal_stride = v;
        if (ov.key == "sets") {
            if (spec.kind != LayerKind::corr3d) throw config_error(origin, ov.line, ov.layer + " has no weight sets");
            spec.sets = v;
        }
    }
    try {
        (void)chain_shapes(p.input, p.specs);
    } catch (const shape_error& e) {
        const std::string msg = e.what();
        int line = 0;
        for (const auto& ov : overrides) {
            if (msg.find(ov.layer) != std::string::npos) line = ov.line;
        }
        throw config_error(origin, line, "model does not chain: " + msg);
    }
    return p;
}

RunConfig default_config(const std::string& preset) {
    RunConfig cfg;
    cfg.preset = preset;
    cfg.train = preset == "dsr" ? TrainConfig::dsr() : TrainConfig::ar();
    cfg.data.sampling = preset == "dsr" ? SamplingPolicy::dsr() : SamplingPolicy::ar();
    cfg.train.seed = cfg.seed;
    cfg.train.deterministic = false;
    return cfg;
}

RunConfig parse_config(const std::string& text, const std::string& origin, const fs::path& base) {
    const Parser ps(origin, base);
    const auto items = tokenize(text, ps);

    std::string preset = "ar";
    for (const auto& it : items) {
        if (it.section == "model" && it.key == "preset") {
            preset = it.value;
            ps.guarded(it, [&] { return make_preset(preset, 1); });
        }
    }
    RunConfig cfg = default_config(preset);
    cfg.origin = origin;
    auto& tr = cfg.train;
    auto& data = cfg.data;

    for (const auto& it : items) {
        const auto& k = it.key;
        if (it.section == "run") {
            if (k == "seed") cfg.seed = static_cast<std::uint64_t>(ps.integer(it, 0, INT64_MAX));
            if (k == "out") cfg.out = ps.path(it);
        } else if (it.section == "model") {
            if (k == "classes") cfg.classes = static_cast<int>(ps.integer(it, 1, 1 << 20));
            if (k == "hidden_activation") cfg.hidden = ps.guarded(it, [&] { return parse_activation(it.value); });
            if (k == "input") {
                (void)parse_input(it, ps);
                cfg.overrides.push_back({"input", "", it.value, it.line});
            }
            if (const auto dot = k.find('.'); dot != std::string::npos) {
                cfg.overrides.push_back({k.substr(0, dot), k.substr(dot + 1), it.value, it.line});
            }
        } else if (it.section == "train") {
            if (k == "loss") {
                if (it.value == "ce") tr.loss = Loss::ce;
                else if (it.value == "mse") tr.loss = Loss::mse;
                else ps.fail(it.line, "loss: expected ce or mse, got '" + it.value + "'");
            }
            if (k == "norm_grad") {
                if (it.value == "stop_gradient") tr.norm_grad = NormGrad::stop_gradient;
                else if (it.value == "exact") tr.norm_grad = NormGrad::exact;
                else ps.fail(it.line, "norm_grad: expected stop_gradient or exact, got '" + it.value + "'");
            }
            if (k == "lr0") tr.lr0 = ps.real(it);
            if (k == "decay") tr.decay = ps.real(it);
            if (k == "decay_every") tr.decay_every = static_cast<int>(ps.integer(it, 1, 1 << 20));
            if (k == "batch") tr.batch = static_cast<int>(ps.integer(it, 1, 1 << 24));
            if (k == "max_epochs") tr.max_epochs = static_cast<int>(ps.integer(it, 1, 1 << 24));
            if (k == "patience") tr.patience = static_cast<int>(ps.integer(it, 0, 1 << 24));
            if (k == "deterministic") tr.deterministic = ps.boolean(it);
        } else if (it.section == "data") {
            if (k == "manifest") data.manifest = ps.path(it);
            if (k == "val_manifest") data.val_manifest = ps.path(it);
            if (k == "test_manifest") data.test_manifest = ps.path(it);
            if (k == "sampling") data.sampling.mode = ps.guarded(it, [&] { return parse_sampling_mode(it.value); });
            if (k == "clip_len") data.sampling.clip_len = static_cast<int>(ps.integer(it, 1, 4096));
            if (k == "window") data.sampling.window = static_cast<int>(ps.integer(it, 1, 8192));
            if (k == "hop") data.sampling.hop = static_cast<int>(ps.integer(it, 1, 1 << 20));
            if (k == "overlap") data.sampling.overlap = static_cast<int>(ps.integer(it, 0, 4096));
            if (k == "split") {
                if (it.value == "none") {
                    data.split = false;
                } else if (it.value == "random" || it.value == "subject") {
                    data.split = true;
                    data.split_options.mode = it.value == "random" ? SplitMode::random : SplitMode::subject;
                } else {
                    ps.fail(it.line, "split: expected none, random or subject, got '" + it.value + "'");
                }
            }
            if (k == "train_ratio") data.split_options.train = ps.real(it);
            if (k == "val_ratio") data.split_options.val = ps.real(it);
            if (k == "test_subjects") {
                std::istringstream ss(it.value);
                for (std::string s; std::getline(ss, s, ',');) {
                    if (!trim(s).empty()) data.split_options.test_subjects.push_back(trim(s));
                }
            }
        } else if (it.section == "fusion") {
            if (k == "mode") cfg.fusion.mode = ps.guarded(it, [&] { return parse_fusion_mode(it.value); });
            if (k == "svm_c") cfg.fusion.svm.c_reg = ps.real(it);
            if (k == "svm_tol") cfg.fusion.svm.tol = ps.real(it);
            if (k == "svm_max_epochs") cfg.fusion.svm.max_epochs = static_cast<int>(ps.integer(it, 1, 1 << 24));
        }
    }
    tr.seed = cfg.seed;
    data.split_options.seed = cfg.seed;
    cfg.fusion.svm.seed = cfg.seed;

    auto line_of = [&](const std::string& section, std::initializer_list<const char*> keys) {
        for (auto rit = items.rbegin(); rit != items.rend(); ++rit) {
            for (const char* key : keys) {
                if (rit->section == section && rit->key == key) return rit->line;
            }
        }
        return 0;
    };
    try {
        tr.validate();
    } catch (const std::exception& e) {
        throw config_error(origin, line_of("train", {"lr0", "decay", "decay_every", "batch", "max_epochs"}), e.what());
    }
    try {
        data.sampling.validate();
    } catch (const std::exception& e) {
        throw config_error(origin, line_of("data", {"sampling", "clip_len", "window", "hop", "overlap"}), e.what());
    }
    const auto& so = data.split_options;
    if (so.train < 0 || so.val < 0 || so.train + so.val > 1.0 + 1e-12) {
        throw config_error(origin, line_of("data", {"train_ratio", "val_ratio"}),
                           "split ratios must be non-negative and sum to at most 1");
    }
    if (!(cfg.fusion.svm.c_reg > 0) || !(cfg.fusion.svm.tol > 0)) {
        throw config_error(origin, line_of("fusion", {"svm_c", "svm_tol"}), "svm_c and svm_tol must be > 0");
    }
    (void)cfg.model(std::max(cfg.classes, 1));
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw config_error(path.string(), 0, "config file not found");
    return parse_config(read_file(path), path.string(), path.parent_path());
}

}  // namespace pyranet
