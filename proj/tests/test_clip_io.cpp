#include "doctest.h"

#include "pyranet/clip_io.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace pyranet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "pyranet_test_clip_io" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_ppm(const fs::path& p, int w, int h, unsigned char r, unsigned char g, unsigned char b) {
    std::ofstream os(p, std::ios::binary);
    os << "P6\n" << w << ' ' << h << "\n255\n";
    for (int k = 0; k < w * h; ++k) os.put(static_cast<char>(r)).put(static_cast<char>(g)).put(static_cast<char>(b));
}

GrayImage flat(int w, int h, float v) { return {w, h, std::vector<float>(static_cast<std::size_t>(w) * h, v)}; }

void write_video(const fs::path& dir, int frames, int w = 6, int h = 4) {
    fs::create_directories(dir);
    for (int t = 0; t < frames; ++t) {
        auto img = flat(w, h, static_cast<float>(t) / static_cast<float>(frames));
        save_pgm(dir / ("frame" + std::to_string(t + 1) + ".pgm"), img);
    }
}

struct Quiet {
    std::vector<std::string> seen;
    Quiet() {
        set_warning_handler([this](const std::string& m) { seen.push_back(m); });
    }
    ~Quiet() { set_warning_handler(nullptr); }
};

}  // namespace

TEST_CASE("alternate sampling takes every other frame of a 25-frame window") {
    const auto idx = clip_frame_indices(25, SamplingPolicy::ar());
    REQUIRE(idx.size() == 1);
    std::vector<int> want;
    for (int k = 0; k < 25; k += 2) want.push_back(k);
    CHECK(idx[0] == want);
    CHECK(clip_frame_indices(24, SamplingPolicy::ar()).empty());
    const auto two = clip_frame_indices(50, SamplingPolicy::ar());
    REQUIRE(two.size() == 2);
    CHECK(two[1].front() == 25);
    CHECK(two[1].back() == 49);
    CHECK(clip_frame_indices(74, SamplingPolicy::ar()).size() == 2);
}

TEST_CASE("sliding sampling advances by clip_len - overlap") {
    const auto idx = clip_frame_indices(25, SamplingPolicy::dsr());
    REQUIRE(idx.size() == 3);
    CHECK(idx[0].front() == 0);
    CHECK(idx[1].front() == 6);
    CHECK(idx[2].front() == 12);
    CHECK(idx[2].back() == 24);
    CHECK(clip_frame_indices(13, SamplingPolicy::dsr()).size() == 1);
    CHECK(clip_frame_indices(12, SamplingPolicy::dsr()).empty());
}

TEST_CASE("sampling policy validation") {
    SamplingPolicy p = SamplingPolicy::ar();
    p.hop = 0;
    CHECK_THROWS(p.validate());
    p = SamplingPolicy::dsr();
    p.overlap = 13;
    CHECK_THROWS(p.validate());
    CHECK(SamplingPolicy::ar().min_frames() == 25);
    CHECK(SamplingPolicy::dsr().min_frames() == 13);
    CHECK(parse_sampling_mode("sliding") == SamplingMode::sliding);
    CHECK_THROWS((void)parse_sampling_mode("random"));
}

TEST_CASE("short videos yield no clips and a warning") {
    Quiet q;
    std::vector<GrayImage> frames(20, flat(3, 3, 0.5f));
    CHECK(sample_ar_clips(frames, SamplingPolicy::ar()).empty());
    CHECK(q.seen.size() == 1);
    frames.resize(13);
    const auto clips = sample_dsr_clips(frames, SamplingPolicy::dsr(), 4);
    REQUIRE(clips.size() == 1);
    CHECK(clips[0].label == 4);
    CHECK(clips[0].shape() == Shape{3, 3, 13, 1});
}

TEST_CASE("clip data is frame-contiguous") {
    std::vector<GrayImage> frames;
    for (int t = 0; t < 25; ++t) frames.push_back(flat(2, 2, static_cast<float>(t)));
    const auto clips = sample_clips(frames, SamplingPolicy::ar());
    REQUIRE(clips.size() == 1);
    for (int k = 0; k < 13; ++k) CHECK(clips[0].at(1, 1, k) == static_cast<float>(2 * k));
}

TEST_CASE("colour frames reduce with luma weights") {
    const auto dir = fresh_dir("luma");
    write_ppm(dir / "red.ppm", 2, 2, 255, 0, 0);
    write_ppm(dir / "white.ppm", 1, 1, 255, 255, 255);
    CHECK(load_frame(dir / "red.ppm").at(0, 0) == doctest::Approx(0.299));
    CHECK(load_frame(dir / "white.ppm").at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("pgm round trip and 16-bit samples") {
    const auto dir = fresh_dir("pgm");
    GrayImage img{3, 2, {0.0f, 0.5f, 1.0f, 0.25f, 0.75f, 2.0f}};
    save_pgm(dir / "a.pgm", img);
    const auto back = load_frame(dir / "a.pgm");
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.at(0, 1) == doctest::Approx(128.0 / 255.0));
    CHECK(back.at(1, 2) == 1.0f);

    std::ofstream os(dir / "b.pgm", std::ios::binary);
    os << "P5\n# comment\n1 1\n65535\n";
    os.put(static_cast<char>(0x80)).put(0);
    os.close();
    CHECK(load_frame(dir / "b.pgm").at(0, 0) == doctest::Approx(32768.0 / 65535.0));

    std::ofstream png(dir / "c.png", std::ios::binary);
    png << "\x89PNG\r\n\x1a\n";
    png.close();
    CHECK_THROWS((void)load_frame(dir / "c.png"));
}

TEST_CASE("bilinear resize") {
    GrayImage img{2, 1, {0.0f, 1.0f}};
    const auto up = resize_bilinear(img, 4, 1);
    CHECK(up.pixels == std::vector<float>{0.0f, 0.25f, 0.75f, 1.0f});
    CHECK(resize_bilinear(img, 2, 1).pixels == img.pixels);
    const auto down = resize_bilinear(flat(8, 6, 0.4f), 3, 2);
    for (const float v : down.pixels) CHECK(v == doctest::Approx(0.4f));
}

TEST_CASE("frames list in natural order") {
    const auto dir = fresh_dir("natural");
    for (const char* n : {"f10.pgm", "f2.pgm", "f1.pgm", "notes.txt"}) save_pgm(dir / n, flat(1, 1, 0.0f));
    const auto files = list_frames(dir);
    REQUIRE(files.size() == 3);
    CHECK(files[0].filename() == "f1.pgm");
    CHECK(files[1].filename() == "f2.pgm");
    CHECK(files[2].filename() == "f10.pgm");
}

TEST_CASE("manifest from a directory tree") {
    Quiet q;
    const auto root = fresh_dir("tree");
    write_video(root / "walk" / "p1_a", 25);
    write_video(root / "walk" / "p2_a", 30);
    write_video(root / "jump" / "p1_b", 26);
    write_video(root / "jump" / "p3_b", 10);  // too short
    const auto m = build_manifest(root, SamplingPolicy::ar());
    CHECK(m.class_names == std::vector<std::string>{"jump", "walk"});
    REQUIRE(m.entries.size() == 3);
    CHECK(m.entries[0].label == 0);
    CHECK(m.entries[0].subject == "p1");
    CHECK(m.entries[2].frames == 30);
    CHECK(q.seen.size() == 1);

    write_manifest(root / "list.tsv", m);
    const auto back = read_manifest(root / "list.tsv");
    CHECK(back.class_names == m.class_names);
    REQUIRE(back.entries.size() == 3);
    CHECK(fs::equivalent(back.entries[1].video, m.entries[1].video));

    const auto clips = load_clips(back, SamplingPolicy::ar(), 3, 2);
    REQUIRE(clips.size() == 3);
    CHECK(clips[0].shape() == Shape{3, 2, 13, 1});
    CHECK(clips[2].label == 1);
}

TEST_CASE("manifest errors") {
    Quiet q;
    const auto root = fresh_dir("bad");
    write_video(root / "a" / "v1", 25);
    write_video(root / "b" / "v1", 25);
    CHECK_THROWS((void)build_manifest(root, SamplingPolicy::ar()));
    fs::remove_all(root / "b");
    write_video(root / "b" / "v2", 5);
    CHECK_THROWS((void)build_manifest(root, SamplingPolicy::ar()));
}

TEST_CASE("random split is stratified and disjoint") {
    DatasetManifest m;
    m.class_names = {"a", "b"};
    for (int c = 0; c < 2; ++c)
        for (int k = 0; k < 10; ++k) m.entries.push_back({c, "v" + std::to_string(c) + "_" + std::to_string(k), 25, "s"});
    SplitOptions o;
    o.seed = 3;
    const auto s = split_manifest(m, o);
    CHECK(s.train.entries.size() == 12);
    CHECK(s.val.entries.size() == 4);
    CHECK(s.test.entries.size() == 4);
    std::set<std::string> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
        int per[2] = {0, 0};
        for (const auto& e : part->entries) {
            CHECK(seen.insert(e.video.string()).second);
            ++per[e.label];
        }
        CHECK(per[0] == per[1]);
    }
    const auto again = split_manifest(m, o);
    CHECK(again.train.entries.front().video == s.train.entries.front().video);
}

TEST_CASE("subject split keeps each subject on one side") {
    DatasetManifest m;
    m.class_names = {"a", "b"};
    for (const char* subj : {"p1", "p2", "p3", "p4", "p5"})
        for (int c = 0; c < 2; ++c) m.entries.push_back({c, std::string(subj) + "_" + std::to_string(c), 25, subj});
    SplitOptions o;
    o.mode = SplitMode::subject;
    o.test_subjects = {"p5"};
    const auto s = split_manifest(m, o);
    CHECK(s.test.entries.size() == 2);
    for (const auto& e : s.test.entries) CHECK(e.subject == "p5");
    std::set<std::string> tr, va;
    for (const auto& e : s.train.entries) tr.insert(e.subject);
    for (const auto& e : s.val.entries) va.insert(e.subject);
    for (const auto& x : tr) CHECK(va.count(x) == 0);
    CHECK(tr.size() + va.size() == 4);
}

TEST_CASE("clip archive round trip") {
    const auto dir = fresh_dir("archive");
    std::vector<Clip> clips;
    clips.emplace_back(2, 2, 1, std::vector<float>{0.1f, 0.2f, 0.3f, 0.4f}, 1);
    clips.emplace_back(1, 1, 2, std::vector<float>{-1.0f, 1e-20f});
    save_clips(dir / "c.bin", clips);
    CHECK(is_clip_archive(dir / "c.bin"));
    const auto back = load_clip_archive(dir / "c.bin");
    REQUIRE(back.size() == 2);
    CHECK(back[0].data == clips[0].data);
    CHECK(back[0].label == 1);
    CHECK_FALSE(back[1].label.has_value());
    CHECK(back[1].data == clips[1].data);

    auto bytes = read_file(dir / "c.bin");
    bytes.resize(bytes.size() - 3);
    write_file(dir / "t.bin", bytes);
    CHECK_THROWS((void)load_clip_archive(dir / "t.bin"));
}
