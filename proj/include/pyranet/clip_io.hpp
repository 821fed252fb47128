#pragma once

#include "pyranet/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace pyranet {

// Grayscale frame, row-major, values in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    [[nodiscard]] float at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row) * width + col];
    }
};

// Binary PGM (P5, 8 or 16 bit) and PPM (P6). RGB is reduced with luma
// weights 0.299, 0.587, 0.114. Samples are divided by the file's maxval.
[[nodiscard]] GrayImage load_frame(const std::filesystem::path& path);

// 8-bit P5, values clamped to [0, 1] and rounded.
void save_pgm(const std::filesystem::path& path, const GrayImage& img);

// Half-pixel-centred bilinear resampling with edge clamping. Returns the
// input unchanged at its own size.
[[nodiscard]] GrayImage resize_bilinear(const GrayImage& img, int width, int height);

// Frame files of one video directory (.pgm / .ppm), in natural name order so
// frame2 precedes frame10.
[[nodiscard]] std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

enum class SamplingMode { alternate, sliding };

// alternate: every other frame of a (2 clip_len - 1)-frame window, windows
// advancing by `hop`. sliding: consecutive clip_len-frame clips whose starts
// advance by clip_len - overlap.
struct SamplingPolicy {
    SamplingMode mode = SamplingMode::alternate;
    int clip_len = 13;
    int window = 25;
    int hop = 25;
    int overlap = 7;

    void validate() const;
    [[nodiscard]] int min_frames() const;

    static SamplingPolicy ar() { return {}; }
    static SamplingPolicy dsr() { return {SamplingMode::sliding, 13, 25, 25, 7}; }
};

[[nodiscard]] std::string sampling_mode_name(SamplingMode mode);
[[nodiscard]] SamplingMode parse_sampling_mode(const std::string& text);

// Receives non-fatal diagnostics (short videos, skipped directories). The
// default handler writes to stderr; pass an empty function to silence.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);

// 0-based frame indices of every clip a video of `frames` frames yields.
[[nodiscard]] std::vector<std::vector<int>> clip_frame_indices(int frames, const SamplingPolicy& policy);

// Frames must share one size. Too few frames yields an empty list and a warning.
[[nodiscard]] std::vector<Clip> sample_ar_clips(const std::vector<GrayImage>& frames,
                                                const SamplingPolicy& policy,
                                                std::optional<int> label = std::nullopt);
[[nodiscard]] std::vector<Clip> sample_dsr_clips(const std::vector<GrayImage>& frames,
                                                 const SamplingPolicy& policy,
                                                 std::optional<int> label = std::nullopt);
[[nodiscard]] std::vector<Clip> sample_clips(const std::vector<GrayImage>& frames,
                                             const SamplingPolicy& policy,
                                             std::optional<int> label = std::nullopt);

struct ManifestEntry {
    int label = 0;
    std::filesystem::path video;
    int frames = 0;
    std::string subject;
};

struct DatasetManifest {
    std::vector<std::string> class_names;
    std::vector<ManifestEntry> entries;

    [[nodiscard]] int classes() const { return static_cast<int>(class_names.size()); }
    // Labels dense from 0 and every entry long enough for one clip.
    void validate(const SamplingPolicy& policy) const;
};

// Scans root/<class>/<video>/<frames>. Classes and videos are taken in name
// order; a class index is its position. The subject of a video is the part of
// its directory name before the first '_'. Videos too short for one clip are
// skipped with a warning. Throws on a class without usable videos and on a
// video name that appears under two classes.
[[nodiscard]] DatasetManifest build_manifest(const std::filesystem::path& root,
                                             const SamplingPolicy& policy);

// class_name<TAB>video_path<TAB>frame_count<TAB>subject, one line per video.
// Relative paths are resolved against the manifest's directory on reading.
// Class indices follow order of first appearance.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
[[nodiscard]] DatasetManifest read_manifest(const std::filesystem::path& path);

enum class SplitMode { random, subject };

struct SplitOptions {
    SplitMode mode = SplitMode::random;
    double train = 0.6;
    double val = 0.2;  // the rest is test
    // subject mode: when non-empty these subjects form the test side, and the
    // remaining subjects are divided between train and val by the ratios.
    std::vector<std::string> test_subjects;
    std::uint64_t seed = 1;
};

struct ManifestSplit {
    DatasetManifest train;
    DatasetManifest val;
    DatasetManifest test;
};

// random: stratified per class, each class shuffled under the seed.
// subject: whole subjects go to one side.
[[nodiscard]] ManifestSplit split_manifest(const DatasetManifest& manifest, const SplitOptions& opts);

// Loads every video (in parallel), resizes frames to width x height when they
// differ and samples clips labelled with the entry's class. Output order
// follows the manifest.
[[nodiscard]] std::vector<Clip> load_clips(const DatasetManifest& manifest,
                                           const SamplingPolicy& policy, int width, int height);

// Binary clip archive: "3DPC", version, count, then per clip width, height,
// frames, label (-1 for none) and float32 samples, all little-endian.
void save_clips(const std::filesystem::path& path, const std::vector<Clip>& clips);
[[nodiscard]] std::vector<Clip> load_clip_archive(const std::filesystem::path& path);

// Clip archive as written by save_clips, or a manifest otherwise.
[[nodiscard]] bool is_clip_archive(const std::filesystem::path& path);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace pyranet
