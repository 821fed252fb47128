#include "commands.hpp"

#include "pyranet/checkpoint.hpp"
#include "pyranet/clip_io.hpp"
#include "pyranet/config.hpp"
#include "pyranet/fusion.hpp"
#include "pyranet/oracle.hpp"
#include "pyranet/svm.hpp"
#include "pyranet/synthetic.hpp"
#include "pyranet/train.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace fs = std::filesystem;

namespace pyranet::cli {

namespace {

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int default_classes(const std::string& preset) {
    if (preset == "dsr") return 14;
    if (preset == "tiny") return 3;
    return 6;
}

std::string geometry_text(const LayerSpec& s, const Shape& in) {
    switch (s.kind) {
        case LayerKind::corr3d:
        case LayerKind::pool3d:
            return "r=" + std::to_string(s.geom.rf) + " O=" + std::to_string(s.geom.overlap) +
                   " D=" + std::to_string(s.geom.depth) + " G=" + std::to_string(s.geom.temporal_stride);
        case LayerKind::norm: return "-";
        case LayerKind::fc: return std::to_string(in.size()) + " -> " + std::to_string(s.out_classes);
    }
    return "-";
}

void write_layer_table(std::ostream& os, const Shape& input, const std::vector<LayerSpec>& specs) {
    const auto shapes = chain_shapes(input, specs);
    const auto names = layer_names(specs);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-9s %-7s %-17s %-12s %10s\n", "layer", "kind", "geometry", "output", "params");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-9s %-7s %-17s %-12s %10d\n", "input", "-", "-", input.str().c_str(), 0);
    os << buf;
    std::size_t total = 0;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const Shape& in = shapes[l];
        const Shape& out = shapes[l + 1];
        std::size_t n = 0;
        if (specs[l].kind != LayerKind::norm) {
            n = param_weight_shape(specs[l], in, out).size() + param_bias_shape(specs[l], in, out).size();
        }
        total += n;
        const std::string shape = specs[l].kind == LayerKind::fc ? std::to_string(out.size()) : out.str();
        std::snprintf(buf, sizeof buf, "%-9s %-7s %-17s %-12s %10zu\n", names[l].c_str(),
                      std::string(layer_kind_name(specs[l].kind)).c_str(), geometry_text(specs[l], in).c_str(),
                      shape.c_str(), n);
        os << buf;
    }
    const double bytes = 4.0 * static_cast<double>(total);
    os << "total parameters: " << total << " (" << fmt("%.2f", total / 1e6) << " M)\n";
    os << "32-bit size: " << static_cast<std::size_t>(bytes) << " bytes (" << fmt("%.2f", bytes / 1e6)
       << " MB, parameters only; see README for how this compares with published model sizes)\n";
}

void apply_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.train.seed = seed;
    cfg.data.split_options.seed = seed;
    cfg.fusion.svm.seed = seed;
}

RunConfig resolve_config(const std::string& config_path, const std::string& preset) {
    if (!config_path.empty()) return load_config(config_path);
    return default_config(preset.empty() ? "ar" : preset);
}

std::vector<Clip> ensure_labelled(std::vector<Clip> clips, const std::string& what) {
    for (const auto& c : clips) {
        if (!c.label) throw usage_error(what + " contains unlabelled clips");
    }
    return clips;
}

struct LoadedData {
    std::vector<std::string> class_names;
    std::vector<Clip> train, val, test;
};

std::vector<std::string> archive_class_names(const std::vector<Clip>& clips, int classes) {
    int n = classes;
    for (const auto& c : clips) n = std::max(n, c.label.value_or(-1) + 1);
    std::vector<std::string> names;
    for (int k = 0; k < n; ++k) names.push_back("class" + std::to_string(k));
    return names;
}

// Stratified clip-level split for clip archives.
void split_clips(const std::vector<Clip>& clips, const SplitOptions& opts, LoadedData& d) {
    Rng rng(opts.seed);
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t k = 0; k < clips.size(); ++k) by_class[clips[k].label.value_or(-1)].push_back(k);
    for (auto& [label, idx] : by_class) {
        rng.shuffle(std::span<std::size_t>(idx));
        const auto n = static_cast<double>(idx.size());
        const auto a = static_cast<std::size_t>(std::llround(opts.train * n));
        const auto b = std::min(idx.size(), a + static_cast<std::size_t>(std::llround(opts.val * n)));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            (k < a ? d.train : k < b ? d.val : d.test).push_back(clips[idx[k]]);
        }
    }
}

std::vector<Clip> load_source(const fs::path& path, const RunConfig& cfg, const Shape& input,
                              std::vector<std::string>* names) {
    if (!fs::exists(path)) throw usage_error("data file not found: " + path.string());
    if (is_clip_archive(path)) {
        auto clips = load_clip_archive(path);
        if (names && names->empty()) *names = archive_class_names(clips, cfg.classes);
        return clips;
    }
    const auto m = read_manifest(path);
    m.validate(cfg.data.sampling);
    if (names && names->empty()) *names = m.class_names;
    return load_clips(m, cfg.data.sampling, input.width, input.height);
}

LoadedData load_training_data(const RunConfig& cfg, const Shape& input) {
    if (cfg.data.manifest.empty()) throw usage_error("no training data: set [data] manifest or pass --manifest");
    if (!fs::exists(cfg.data.manifest)) throw usage_error("manifest not found: " + cfg.data.manifest.string());
    LoadedData d;
    if (cfg.data.split) {
        if (is_clip_archive(cfg.data.manifest)) {
            auto clips = load_clip_archive(cfg.data.manifest);
            d.class_names = archive_class_names(clips, cfg.classes);
            split_clips(clips, cfg.data.split_options, d);
        } else {
            const auto m = read_manifest(cfg.data.manifest);
            m.validate(cfg.data.sampling);
            d.class_names = m.class_names;
            const auto parts = split_manifest(m, cfg.data.split_options);
            d.train = load_clips(parts.train, cfg.data.sampling, input.width, input.height);
            d.val = load_clips(parts.val, cfg.data.sampling, input.width, input.height);
            d.test = load_clips(parts.test, cfg.data.sampling, input.width, input.height);
        }
    } else {
        d.train = load_source(cfg.data.manifest, cfg, input, &d.class_names);
        if (!cfg.data.val_manifest.empty()) d.val = load_source(cfg.data.val_manifest, cfg, input, nullptr);
        if (!cfg.data.test_manifest.empty()) d.test = load_source(cfg.data.test_manifest, cfg, input, nullptr);
    }
    d.train = ensure_labelled(std::move(d.train), "training data");
    if (d.train.empty()) throw usage_error("training data holds no clips");
    return d;
}

int manifest_classes(const RunConfig& cfg) {
    if (cfg.classes > 0) return cfg.classes;
    if (cfg.data.manifest.empty() || !fs::exists(cfg.data.manifest)) return 0;
    if (is_clip_archive(cfg.data.manifest)) {
        return static_cast<int>(archive_class_names(load_clip_archive(cfg.data.manifest), 0).size());
    }
    return read_manifest(cfg.data.manifest).classes();
}

void write_eval_report(std::ostream& os, const EvalReport& r, const std::vector<std::string>& names) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %8s %8s %9s\n", "class", "clips", "correct", "accuracy");
    os << buf;
    for (int c = 0; c < r.classes; ++c) {
        const std::string name = c < static_cast<int>(names.size()) ? names[c] : "class" + std::to_string(c);
        std::snprintf(buf, sizeof buf, "%-16s %8d %8d %8.2f%%\n", name.c_str(), r.per_class_total[c],
                      r.per_class_correct[c], 100.0 * r.class_accuracy(c));
        os << buf;
    }
    int correct = 0;
    for (const int k : r.per_class_correct) correct += k;
    std::snprintf(buf, sizeof buf, "%-16s %8d %8d %8.2f%%\n", "overall", r.total(), correct, 100.0 * r.accuracy());
    os << buf;
    os << "mean loss: " << fmt("%.6f", r.mean_loss) << '\n';
}

// ---- subcommands ---------------------------------------------------------------

struct TrainArgs {
    std::string config, preset, out, manifest, resume;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    int classes = 0;
    int epochs = 0;
    double lr0 = 0.0;
    bool deterministic = false;
    bool dry_run = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    RunConfig cfg = resolve_config(a.config, a.preset);
    if (!a.config.empty() && !a.preset.empty() && a.preset != cfg.preset) {
        throw usage_error("--preset " + a.preset + " conflicts with the config's preset " + cfg.preset);
    }
    if (a.seed_set) apply_seed(cfg, a.seed);
    if (!a.out.empty()) cfg.out = a.out;
    if (!a.manifest.empty()) cfg.data.manifest = a.manifest;
    if (a.classes > 0) cfg.classes = a.classes;
    if (a.epochs > 0) cfg.train.max_epochs = a.epochs;
    if (a.lr0 > 0) cfg.train.lr0 = a.lr0;
    if (a.deterministic) cfg.train.deterministic = true;
    apply_threads(a.threads);

    if (a.dry_run) {
        int classes = manifest_classes(cfg);
        if (classes == 0) classes = default_classes(cfg.preset);
        const auto net = cfg.model(classes);
        out << "preset " << cfg.preset << ", " << classes << " classes\n";
        write_layer_table(out, net.input, net.specs);
        return kOk;
    }

    const auto probe = cfg.model(std::max(cfg.classes, 1));
    LoadedData data = load_training_data(cfg, probe.input);
    const int classes = std::max(cfg.classes, static_cast<int>(data.class_names.size()));
    const auto net = cfg.model(classes);
    write_layer_table(out, net.input, net.specs);

    NetworkModel<float> model;
    std::optional<TrainState> resume;
    if (!a.resume.empty()) {
        auto ck = load_checkpoint(a.resume);
        check_topology(ck, net.input, net.specs);
        model = std::move(ck.model);
        resume = ck.state;
        out << "resuming at epoch " << ck.state.next_epoch << '\n';
    } else {
        Rng rng(cfg.seed);
        model = NetworkModel<float>::build(net.input, net.specs, rng);
    }

    fs::create_directories(cfg.out / "checkpoints");
    const fs::path metrics_path = cfg.out / "metrics.csv";
    std::ofstream metrics(metrics_path, resume ? std::ios::app : std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write " + metrics_path.string());
    if (!resume) write_metrics_header(metrics);

    out << "training on " << data.train.size() << " clips, validating on " << data.val.size() << " clips\n";
    const auto on_epoch = [&](const NetworkModel<float>& m, const EpochMetrics& em, const TrainState& st) {
        write_metrics_row(metrics, em);
        metrics.flush();
        Checkpoint ck{m, st, em.lr, data.class_names};
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%04d.ckpt", em.epoch);
        save_checkpoint(cfg.out / "checkpoints" / name, ck);
        save_checkpoint(cfg.out / "last.ckpt", ck);
        if (em.val_acc && st.stale_epochs == 0) save_checkpoint(cfg.out / "best.ckpt", ck);
        out << "epoch " << em.epoch << "  lr " << fmt("%.9g", em.lr) << "  loss " << fmt("%.6f", em.train_loss)
            << "  train_acc " << fmt("%.4f", em.train_acc);
        if (em.val_acc) out << "  val_acc " << fmt("%.4f", *em.val_acc);
        out << '\n';
        return true;
    };
    const auto result = train(model, data.train, data.val, cfg.train, on_epoch, resume);
    if (result.early_stopped) out << "early stop: no validation improvement for " << cfg.train.patience << " epochs\n";
    if (!data.test.empty()) {
        out << "test set:\n";
        write_eval_report(out, evaluate(model, ensure_labelled(data.test, "test data")), data.class_names);
    }
    return kOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& manifest, const std::string& config, int threads,
             std::ostream& out) {
    apply_threads(threads);
    if (ckpt_path.empty()) throw usage_error("--checkpoint is required");
    if (!fs::exists(ckpt_path)) throw usage_error("checkpoint not found: " + ckpt_path);
    const auto ck = load_checkpoint(ckpt_path);
    RunConfig cfg = config.empty() ? default_config("ar") : load_config(config);
    fs::path src = manifest.empty() ? cfg.data.test_manifest : fs::path(manifest);
    if (src.empty()) throw usage_error("--manifest is required");
    std::vector<std::string> names = ck.class_names;
    const auto clips = ensure_labelled(load_source(src, cfg, ck.model.input_shape(), &names), "evaluation data");
    write_eval_report(out, evaluate(ck.model, clips), names);
    return kOk;
}

int cmd_extract(const std::string& ckpt_path, const std::string& manifest, const std::string& mode,
                const std::string& dest, const std::string& config, int threads, std::ostream& out) {
    apply_threads(threads);
    if (ckpt_path.empty() || manifest.empty() || dest.empty()) {
        throw usage_error("extract needs --checkpoint, --manifest and --out");
    }
    if (!fs::exists(ckpt_path)) throw usage_error("checkpoint not found: " + ckpt_path);
    const auto ck = load_checkpoint(ckpt_path);
    RunConfig cfg = config.empty() ? default_config("ar") : load_config(config);
    const FusionMode fm = mode.empty() ? cfg.fusion.mode : parse_fusion_mode(mode);
    const auto clips = load_source(manifest, cfg, ck.model.input_shape(), nullptr);
    FeatureFile file;
    file.mode = fm;
    file.records = extract_features(ck.model, clips, fm);
    file.length = file.records.empty() ? 0 : file.records.front().values.size();
    write_feature_file(dest, file);
    out << "wrote " << file.records.size() << " " << fusion_mode_tag(fm) << " vectors of length " << file.length
        << " to " << dest << '\n';
    return kOk;
}

int cmd_svm(const std::vector<std::string>& files, const SvmParams& params, const std::string& dest,
            std::ostream& out) {
    if (files.empty() || files.size() > 2) throw usage_error("svm takes a training feature file and optionally a test file");
    for (const auto& f : files) {
        if (!fs::exists(f)) throw usage_error("feature file not found: " + f);
    }
    const auto train_file = read_feature_file(files[0]);
    const auto model = svm_train(train_file.records, params);
    int unconverged = 0;
    for (const auto& m : model.machines) unconverged += m.converged ? 0 : 1;
    out << "one-vs-all linear SVM: " << model.classes << " classes, dimension " << model.dim << ", C "
        << fmt("%g", params.c_reg) << '\n';
    if (unconverged > 0) out << "warning: " << unconverged << " machine(s) stopped at the epoch cap\n";
    out << "train accuracy: " << fmt("%.2f", 100.0 * svm_accuracy(model, train_file.records)) << "%\n";
    if (files.size() == 2) {
        const auto test_file = read_feature_file(files[1]);
        if (test_file.mode != train_file.mode || test_file.length != train_file.length) {
            throw usage_error("test features differ in mode or length from the training features");
        }
        out << "test accuracy: " << fmt("%.2f", 100.0 * svm_accuracy(model, test_file.records)) << "%\n";
    }
    if (!dest.empty()) {
        write_svm_model(dest, model);
        out << "model written to " << dest << '\n';
    }
    return kOk;
}

int cmd_gradcheck(const std::string& preset, std::uint64_t seed, std::size_t samples, const std::string& norm,
                  const std::string& loss, const std::string& csv, std::ostream& out) {
    oracle::SuiteOptions o;
    o.seed = seed;
    o.samples = samples;
    if (norm == "exact") o.norm = NormGrad::exact;
    else if (norm != "stop_gradient") throw usage_error("--norm must be stop_gradient or exact");
    if (loss == "mse") o.loss = Loss::mse;
    else if (loss != "ce") throw usage_error("--loss must be ce or mse");
    const auto reports = oracle::run_suite(o, preset);
    oracle::write_report_table(out, reports);
    if (!csv.empty()) {
        std::ofstream os(csv);
        if (!os) throw std::runtime_error("cannot write " + csv);
        oracle::write_report_csv(os, reports);
    }
    const bool ok = oracle::all_passed(reports);
    out << (ok ? "all layers passed" : "gradient check FAILED") << '\n';
    return ok ? kOk : kRuntimeFailure;
}

int cmd_info(const std::string& ckpt_path, const std::string& preset, int classes, std::ostream& out) {
    if (!ckpt_path.empty()) {
        if (!fs::exists(ckpt_path)) throw usage_error("checkpoint not found: " + ckpt_path);
        const auto ck = load_checkpoint(ckpt_path);
        out << "checkpoint " << ckpt_path << " (format version " << kCheckpointVersion << ")\n";
        if (ck.model.empty()) {
            out << "empty model\ntotal parameters: 0\n";
            return kOk;
        }
        write_layer_table(out, ck.model.input_shape(), ck.model.specs());
        out << "next epoch: " << ck.state.next_epoch << ", lr: " << fmt("%.9g", ck.lr) << '\n';
        return kOk;
    }
    const std::string p = preset.empty() ? "ar" : preset;
    const int n = classes > 0 ? classes : default_classes(p);
    const auto net = make_preset(p, n);
    out << "preset " << p << ", " << n << " classes\n";
    write_layer_table(out, net.input, net.specs);
    return kOk;
}

int cmd_synth(const std::string& dest, int per_class, std::uint64_t seed, double noise, std::ostream& out) {
    if (dest.empty()) throw usage_error("--out is required");
    MovingBarOptions o;
    o.per_class = per_class;
    o.seed = seed;
    o.noise = noise;
    const auto clips = make_moving_bar_clips(o);
    save_clips(dest, clips);
    out << "wrote " << clips.size() << " clips (" << o.width << "x" << o.height << "x" << o.frames << ") to " << dest
        << '\n';
    return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"3D pyramidal network: training, evaluation, feature extraction and checks", "pyranet"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a network from a config file or preset");
    train_cmd->add_option("--config", ta.config, "Run configuration file");
    train_cmd->add_option("--preset", ta.preset, "Preset when no config is given")->check(CLI::IsMember({"ar", "dsr", "tiny"}));
    auto* seed_opt = train_cmd->add_option("--seed", ta.seed, "Seed for initialization, shuffling and splits");
    train_cmd->add_option("--out", ta.out, "Output directory");
    train_cmd->add_option("--resume", ta.resume, "Checkpoint to resume from");
    train_cmd->add_option("--threads", ta.threads, "Worker threads")->check(CLI::PositiveNumber);
    train_cmd->add_flag("--deterministic", ta.deterministic, "Serial, bit-reproducible gradient reduction");
    train_cmd->add_option("--manifest", ta.manifest, "Training manifest or clip archive");
    train_cmd->add_option("--classes", ta.classes, "Number of classes")->check(CLI::PositiveNumber);
    train_cmd->add_option("--epochs", ta.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr0", ta.lr0, "Initial learning rate")->check(CLI::PositiveNumber);
    train_cmd->add_flag("--dry-run", ta.dry_run, "Validate and print the layer table without training");

    std::string ckpt, manifest, config, mode, dest, preset, norm = "stop_gradient", loss = "ce", csv;
    int threads = 0, classes = 0, per_class = 20;
    std::uint64_t seed = 1;
    std::size_t samples = 100;
    double noise = 0.05;
    SvmParams svm;
    std::vector<std::string> files;

    auto* eval_cmd = app.add_subcommand("eval", "Per-class and overall clip accuracy");
    eval_cmd->add_option("--checkpoint", ckpt, "Checkpoint file");
    eval_cmd->add_option("--manifest", manifest, "Manifest or clip archive");
    eval_cmd->add_option("--config", config, "Config supplying the sampling policy");
    eval_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* extract_cmd = app.add_subcommand("extract", "Write fused feature vectors");
    extract_cmd->add_option("--checkpoint", ckpt, "Checkpoint file");
    extract_cmd->add_option("--manifest", manifest, "Manifest or clip archive");
    extract_cmd->add_option("--mode", mode, "Fusion mode F or FM");
    extract_cmd->add_option("--out", dest, "Feature file to write");
    extract_cmd->add_option("--config", config, "Config supplying sampling and fusion settings");
    extract_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* svm_cmd = app.add_subcommand("svm", "Train a one-vs-all linear SVM on feature files");
    svm_cmd->add_option("files", files, "Training feature file, then optional test file")->required();
    svm_cmd->add_option("--c", svm.c_reg, "Soft-margin penalty C")->check(CLI::PositiveNumber);
    svm_cmd->add_option("--tol", svm.tol, "Duality-gap tolerance")->check(CLI::PositiveNumber);
    svm_cmd->add_option("--max-epochs", svm.max_epochs, "Epoch cap per machine")->check(CLI::PositiveNumber);
    svm_cmd->add_option("--seed", svm.seed, "Coordinate order seed");
    svm_cmd->add_option("--out", dest, "Model file to write");

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    grad_cmd->add_option("--preset", preset, "Layer order to mirror")->check(CLI::IsMember({"ar", "dsr", "tiny"}));
    grad_cmd->add_option("--seed", seed, "Seed");
    grad_cmd->add_option("--samples", samples, "Samples per tensor")->check(CLI::PositiveNumber);
    grad_cmd->add_option("--norm", norm, "stop_gradient or exact");
    grad_cmd->add_option("--loss", loss, "ce or mse");
    grad_cmd->add_option("--csv", csv, "Also write the report as CSV");

    auto* info_cmd = app.add_subcommand("info", "Layer shapes and parameter count");
    info_cmd->add_option("--checkpoint", ckpt, "Checkpoint file");
    info_cmd->add_option("--preset", preset, "Preset")->check(CLI::IsMember({"ar", "dsr", "tiny"}));
    info_cmd->add_option("--classes", classes, "Number of classes")->check(CLI::PositiveNumber);

    auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic moving-bar clips as a clip archive");
    synth_cmd->add_option("--out", dest, "Clip archive to write");
    synth_cmd->add_option("--per-class", per_class, "Clips per class")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--seed", seed, "Seed");
    synth_cmd->add_option("--noise", noise, "Pixel noise standard deviation")->check(CLI::NonNegativeNumber);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        err << "run 'pyranet --help' for usage\n";
        return kUsageError;
    }
    ta.seed_set = seed_opt->count() > 0;

    try {
        if (train_cmd->parsed()) return cmd_train(ta, out);
        if (eval_cmd->parsed()) return cmd_eval(ckpt, manifest, config, threads, out);
        if (extract_cmd->parsed()) return cmd_extract(ckpt, manifest, mode, dest, config, threads, out);
        if (svm_cmd->parsed()) return cmd_svm(files, svm, dest, out);
        if (grad_cmd->parsed()) return cmd_gradcheck(preset.empty() ? "tiny" : preset, seed, samples, norm, loss, csv, out);
        if (info_cmd->parsed()) return cmd_info(ckpt, preset, classes, out);
        if (synth_cmd->parsed()) return cmd_synth(dest, per_class, seed, noise, out);
    } catch (const config_error& e) {
        err << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const usage_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}

}  // namespace pyranet::cli
