#include "doctest.h"

#include "commands.hpp"
#include "pyranet/checkpoint.hpp"
#include "pyranet/config.hpp"
#include "pyranet/synthetic.hpp"

#include <filesystem>
#include <sstream>

using namespace pyranet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "pyranet_test_io" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Checkpoint sample_checkpoint() {
    Rng rng(12);
    const auto p = make_preset("tiny", 3);
    Checkpoint ck;
    ck.model = NetworkModel<float>::build(p.input, p.specs, rng);
    for (auto& l : ck.model.layers())
        for (auto& b : l.params.biases.values()) b = static_cast<float>(rng.uniform(-0.1, 0.1));
    ck.state = {5, 0xDEADBEEFCAFEULL, 0.75, 2};
    ck.lr = 0.000135;
    ck.class_names = {"left", "right", "down"};
    return ck;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int rc = cli::run_cli(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return rc;
}

}  // namespace

TEST_CASE("checkpoint round trip preserves forward outputs bit-exactly") {
    const auto ck = sample_checkpoint();
    const auto dir = fresh_dir("ckpt");
    save_checkpoint(dir / "a.ckpt", ck);
    const auto back = load_checkpoint(dir / "a.ckpt");
    CHECK(back.state.next_epoch == 5);
    CHECK(back.state.rng_state == 0xDEADBEEFCAFEULL);
    CHECK(back.state.best_val == 0.75);
    CHECK(back.lr == 0.000135);
    CHECK(back.class_names == ck.class_names);
    for (std::size_t l = 0; l < ck.model.layers().size(); ++l) {
        CHECK(back.model.layers()[l].params == ck.model.layers()[l].params);
        CHECK(back.model.layers()[l].spec == ck.model.layers()[l].spec);
    }
    MovingBarOptions mb;
    mb.per_class = 2;
    for (const auto& clip : make_moving_bar_clips(mb)) {
        const auto x = clip.to_tensor<float>();
        CHECK(forward(back.model, x).scores() == forward(ck.model, x).scores());
    }
    CHECK(serialize_checkpoint(back) == serialize_checkpoint(ck));
    CHECK_FALSE(fs::exists(dir / "a.ckpt.tmp"));
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto bytes = serialize_checkpoint(sample_checkpoint());
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS_AS((void)parse_checkpoint(flipped), format_error);
    CHECK_THROWS_AS((void)parse_checkpoint(bytes.substr(0, bytes.size() - 9)), format_error);
    std::string version = bytes;
    version[4] = 9;
    CHECK_THROWS_WITH_AS((void)parse_checkpoint(version), doctest::Contains("version"), format_error);
    CHECK_THROWS_AS((void)parse_checkpoint("JUNKJUNKJUNKJUNK"), format_error);
    CHECK_THROWS((void)load_checkpoint("/nonexistent/x.ckpt"));
}

TEST_CASE("checkpoint topology check names the layer") {
    const auto ck = sample_checkpoint();
    auto p = make_preset("tiny", 3);
    CHECK_NOTHROW(check_topology(ck, p.input, p.specs));
    p.specs[4].geom.overlap = 1;
    CHECK_THROWS_WITH(check_topology(ck, p.input, p.specs), doctest::Contains("3DCORR5"));
    CHECK_THROWS(check_topology(ck, {16, 12, 11, 1}, make_preset("tiny", 3).specs));
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config(R"(# run settings
[run]
seed = 9
[model]
preset = tiny   ; small net
classes = 3
hidden_activation = tanh
[train]
lr0 = 0.0015
batch = 20
norm_grad = exact
[data]
sampling = sliding
split = random
train_ratio = 0.6
val_ratio = 0.2
[fusion]
mode = FM
svm_c = 2
)");
    CHECK(cfg.seed == 9);
    CHECK(cfg.train.seed == 9);
    CHECK(cfg.preset == "tiny");
    CHECK(cfg.train.lr0 == 0.0015);
    CHECK(cfg.train.batch == 20);
    CHECK(cfg.train.norm_grad == NormGrad::exact);
    CHECK(cfg.data.sampling.mode == SamplingMode::sliding);
    CHECK(cfg.data.split);
    CHECK(cfg.fusion.mode == FusionMode::mean);
    CHECK(cfg.fusion.svm.c_reg == 2.0);
    const auto net = cfg.model(3);
    CHECK(net.specs[0].activation == ActivationKind::tanh());
}

TEST_CASE("layer overrides") {
    const auto cfg = parse_config("[model]\npreset = tiny\n3DCORR5.rf = 2\n3DCORR5.overlap = 1\n");
    const auto net = cfg.model(3);
    CHECK(net.specs[4].geom.rf == 2);
    CHECK(net.specs[4].geom.overlap == 1);
}

TEST_CASE("config errors carry line numbers") {
    auto line_of = [](const std::string& text) {
        try {
            (void)parse_config(text, "t.ini");
        } catch (const config_error& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("[train]\nlr0 = 0.1\nbogus = 1\n") == 3);
    CHECK(line_of("[train]\nlr0 = 0.1\nlr0 = 0.2\n") == 3);
    CHECK(line_of("[nowhere]\n") == 1);
    CHECK(line_of("[train]\nbatch = many\n") == 2);
    CHECK(line_of("\n\n[model]\npreset = tiny\n3DCORR5.rf = 9\n") == 5);
    CHECK(line_of("[data]\nsampling = sliding\noverlap = 13\n") == 3);
    CHECK(line_of("[model]\nclasses = 3\nno equals sign\n") == 3);
    CHECK(line_of("[model]\nNORM2.rf = 3\n") == 2);
    CHECK_THROWS_WITH((void)parse_config("[train]\nloss = hinge\n", "t.ini"), doctest::Contains("t.ini:2"));
}

TEST_CASE("default configs") {
    CHECK(default_config("dsr").train.lr0 == 0.000015);
    CHECK(default_config("dsr").data.sampling.mode == SamplingMode::sliding);
    CHECK(default_config("ar").train.batch == 200);
    CHECK(default_config("ar").data.sampling.mode == SamplingMode::alternate);
}

TEST_CASE("cli exit codes") {
    std::string text;
    CHECK(run({"info", "--preset", "dsr", "--classes", "14"}, &text) == cli::kOk);
    CHECK(text.find("832883") != std::string::npos);
    CHECK(run({"info", "--preset", "ar"}, &text) == cli::kOk);
    CHECK(text.find("200277") != std::string::npos);
    CHECK(run({"nonsense"}) == cli::kUsageError);
    CHECK(run({"train", "--preset", "tiny"}) == cli::kUsageError);
    CHECK(run({"train", "--preset", "tiny", "--manifest", "/nonexistent.tsv"}) == cli::kUsageError);
    CHECK(run({"train", "--preset", "huge"}) == cli::kUsageError);
    CHECK(run({"eval", "--checkpoint", "/nonexistent.ckpt", "--manifest", "/nonexistent.tsv"}) != cli::kOk);
    CHECK(run({"gradcheck", "--samples", "20"}, &text) == cli::kOk);
    CHECK(text.find("net:3DCORR1") != std::string::npos);

    const auto dir = fresh_dir("cfg");
    write_file(dir / "bad.ini", "[train]\nlr0 = -1\n");
    CHECK(run({"train", "--config", (dir / "bad.ini").string()}, &text) == cli::kUsageError);
    CHECK(text.find("bad.ini:2") != std::string::npos);
}

TEST_CASE("cli end to end on synthetic clips") {
    const auto dir = fresh_dir("e2e");
    const auto archive = (dir / "clips.bin").string();
    REQUIRE(run({"synth", "--out", archive, "--per-class", "5", "--seed", "3"}) == cli::kOk);
    write_file(dir / "run.ini", "[model]\npreset = tiny\n[train]\nlr0 = 0.0015\nbatch = 5\nmax_epochs = 2\n"
                                "[data]\nmanifest = clips.bin\nsplit = random\n");
    std::string text;
    REQUIRE(run({"train", "--config", (dir / "run.ini").string(), "--out", (dir / "run").string(),
                 "--deterministic"},
                &text) == cli::kOk);
    CHECK(fs::exists(dir / "run" / "metrics.csv"));
    CHECK(fs::exists(dir / "run" / "last.ckpt"));
    CHECK(fs::exists(dir / "run" / "checkpoints" / "epoch_0001.ckpt"));
    const auto ckpt = (dir / "run" / "last.ckpt").string();
    CHECK(run({"eval", "--checkpoint", ckpt, "--manifest", archive}, &text) == cli::kOk);
    CHECK(text.find("overall") != std::string::npos);
    const auto feats = (dir / "f.txt").string();
    CHECK(run({"extract", "--checkpoint", ckpt, "--manifest", archive, "--mode", "FM", "--out", feats}) == cli::kOk);
    CHECK(read_feature_file(feats).records.size() == 15);
    CHECK(run({"svm", feats, feats, "--out", (dir / "m.svm").string()}, &text) == cli::kOk);
    CHECK(fs::exists(dir / "m.svm"));
    CHECK(run({"train", "--config", (dir / "run.ini").string(), "--out", (dir / "run").string(), "--resume", ckpt,
               "--epochs", "3"},
              &text) == cli::kOk);
    CHECK(text.find("resuming at epoch 2") != std::string::npos);
}
