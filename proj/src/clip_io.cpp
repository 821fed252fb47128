#include "pyranet/clip_io.hpp"

#include "pyranet/bytes.hpp"
#include "pyranet/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace pyranet {

namespace {

std::mutex g_warn_mutex;
WarningHandler g_warn = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };

void warn(const std::string& msg) {
    std::lock_guard lock(g_warn_mutex);
    if (g_warn) g_warn(msg);
}

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::string_view s, std::size_t& pos) {
    while (pos < s.size()) {
        if (s[pos] == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        } else {
            break;
        }
    }
}

int read_pnm_int(std::string_view s, std::size_t& pos, const fs::path& path) {
    skip_pnm_space(s, pos);
    if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) {
        throw format_error(path.string() + ": corrupt PNM header");
    }
    long v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        v = v * 10 + (s[pos] - '0');
        if (v > 1 << 24) throw format_error(path.string() + ": PNM header value out of range");
        ++pos;
    }
    return static_cast<int>(v);
}

bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            auto na = a.substr(i, ie - i), nb = b.substr(j, je - j);
            na.erase(0, std::min(na.find_first_not_of('0'), na.size()));
            nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size()));
            if (na.size() != nb.size()) return na.size() < nb.size();
            if (na != nb) return na < nb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) return a.size() - i < b.size() - j;
    return a < b;
}

std::vector<fs::path> sorted_subdirs(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return natural_less(a.filename().string(), b.filename().string());
    });
    return out;
}

std::string subject_of(const std::string& video_name) {
    return video_name.substr(0, video_name.find('_'));
}

Clip make_clip(const std::vector<GrayImage>& frames, const std::vector<int>& idx,
               std::optional<int> label) {
    const int w = frames.front().width;
    const int h = frames.front().height;
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(w) * h * idx.size());
    for (const int k : idx) {
        const auto& f = frames[k];
        data.insert(data.end(), f.pixels.begin(), f.pixels.end());
    }
    return Clip(w, h, static_cast<int>(idx.size()), std::move(data), label);
}

void check_frames(const std::vector<GrayImage>& frames) {
    for (const auto& f : frames) {
        if (f.width != frames.front().width || f.height != frames.front().height) {
            throw shape_error("video frames differ in size");
        }
    }
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(g_warn_mutex);
    g_warn = std::move(handler);
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write to " + path.string() + " failed");
}

GrayImage load_frame(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("frame not found: " + path.string());
    const std::string raw = read_file(path);
    const std::string_view s = raw;
    if (s.size() >= 8 && s.substr(1, 3) == "PNG") {
        throw format_error(path.string() + ": PNG frames are not supported, convert to PGM");
    }
    if (s.size() < 2 || s[0] != 'P' || (s[1] != '5' && s[1] != '6')) {
        throw format_error(path.string() + ": unsupported frame format (expected binary PGM/PPM)");
    }
    const bool rgb = s[1] == '6';
    std::size_t pos = 2;
    GrayImage img;
    img.width = read_pnm_int(s, pos, path);
    img.height = read_pnm_int(s, pos, path);
    const int maxval = read_pnm_int(s, pos, path);
    if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535) {
        throw format_error(path.string() + ": invalid PNM dimensions or maxval");
    }
    if (pos >= s.size() || !std::isspace(static_cast<unsigned char>(s[pos]))) {
        throw format_error(path.string() + ": corrupt PNM header");
    }
    ++pos;
    const int channels = rgb ? 3 : 1;
    const int bps = maxval > 255 ? 2 : 1;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    if (s.size() - pos < n * channels * bps) {
        throw format_error(path.string() + ": truncated pixel data");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(s.data() + pos);
    auto sample = [&](std::size_t k) -> double {
        return bps == 1 ? p[k] : static_cast<double>((p[2 * k] << 8) | p[2 * k + 1]);
    };
    img.pixels.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double v = 0.0;
        if (rgb) {
            v = 0.299 * sample(3 * k) + 0.587 * sample(3 * k + 1) + 0.114 * sample(3 * k + 2);
        } else {
            v = sample(k);
        }
        img.pixels[k] = static_cast<float>(v / maxval);
    }
    return img;
}

void save_pgm(const fs::path& path, const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    for (const float v : img.pixels) {
        const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    write_file(path, out);
}

GrayImage resize_bilinear(const GrayImage& img, int width, int height) {
    if (width <= 0 || height <= 0) throw shape_error("resize target must be positive");
    if (width == img.width && height == img.height) return img;
    GrayImage out{width, height, std::vector<float>(static_cast<std::size_t>(width) * height)};
    const double sy = static_cast<double>(img.height) / height;
    const double sx = static_cast<double>(img.width) / width;
    for (int r = 0; r < height; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double ty = fy - y0;
        for (int c = 0; c < width; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double tx = fx - x0;
            const double top = img.at(y0, x0) * (1 - tx) + img.at(y0, x1) * tx;
            const double bot = img.at(y1, x0) * (1 - tx) + img.at(y1, x1) * tx;
            out.pixels[static_cast<std::size_t>(r) * width + c] = static_cast<float>(top * (1 - ty) + bot * ty);
        }
    }
    return out;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pgm" || ext == ".ppm") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return natural_less(a.filename().string(), b.filename().string());
    });
    return out;
}

void SamplingPolicy::validate() const {
    if (clip_len < 1) throw std::invalid_argument("clip_len must be >= 1");
    if (mode == SamplingMode::alternate) {
        if (window != 2 * clip_len - 1) {
            throw std::invalid_argument("alternate sampling needs window = 2*clip_len - 1 (" +
                                        std::to_string(2 * clip_len - 1) + "), got " +
                                        std::to_string(window));
        }
        if (hop < 1) throw std::invalid_argument("hop must be >= 1");
    } else if (overlap < 0 || overlap >= clip_len) {
        throw std::invalid_argument("sliding sampling needs 0 <= overlap < clip_len");
    }
}

int SamplingPolicy::min_frames() const {
    return mode == SamplingMode::alternate ? window : clip_len;
}

std::string sampling_mode_name(SamplingMode mode) {
    return mode == SamplingMode::alternate ? "alternate" : "sliding";
}

SamplingMode parse_sampling_mode(const std::string& text) {
    if (text == "alternate" || text == "ar") return SamplingMode::alternate;
    if (text == "sliding" || text == "dsr") return SamplingMode::sliding;
    throw std::invalid_argument("unknown sampling mode '" + text + "' (expected alternate or sliding)");
}

std::vector<std::vector<int>> clip_frame_indices(int frames, const SamplingPolicy& policy) {
    policy.validate();
    std::vector<std::vector<int>> out;
    if (policy.mode == SamplingMode::alternate) {
        for (int start = 0; start + policy.window <= frames; start += policy.hop) {
            std::vector<int> idx;
            for (int k = 0; k < policy.window; k += 2) idx.push_back(start + k);
            out.push_back(std::move(idx));
        }
    } else {
        const int stride = policy.clip_len - policy.overlap;
        for (int start = 0; start + policy.clip_len <= frames; start += stride) {
            std::vector<int> idx(policy.clip_len);
            for (int k = 0; k < policy.clip_len; ++k) idx[k] = start + k;
            out.push_back(std::move(idx));
        }
    }
    return out;
}

std::vector<Clip> sample_clips(const std::vector<GrayImage>& frames, const SamplingPolicy& policy,
                               std::optional<int> label) {
    const int n = static_cast<int>(frames.size());
    if (n < policy.min_frames()) {
        warn("video has " + std::to_string(n) + " frames, " + std::to_string(policy.min_frames()) +
             " needed for one clip; no clips sampled");
        return {};
    }
    check_frames(frames);
    std::vector<Clip> out;
    for (const auto& idx : clip_frame_indices(n, policy)) out.push_back(make_clip(frames, idx, label));
    return out;
}

std::vector<Clip> sample_ar_clips(const std::vector<GrayImage>& frames, const SamplingPolicy& policy,
                                  std::optional<int> label) {
    SamplingPolicy p = policy;
    p.mode = SamplingMode::alternate;
    return sample_clips(frames, p, label);
}

std::vector<Clip> sample_dsr_clips(const std::vector<GrayImage>& frames, const SamplingPolicy& policy,
                                   std::optional<int> label) {
    SamplingPolicy p = policy;
    p.mode = SamplingMode::sliding;
    return sample_clips(frames, p, label);
}

void DatasetManifest::validate(const SamplingPolicy& policy) const {
    for (const auto& e : entries) {
        if (e.label < 0 || e.label >= classes()) {
            throw std::invalid_argument("manifest label " + std::to_string(e.label) + " out of range");
        }
        if (e.frames < policy.min_frames()) {
            throw std::invalid_argument("manifest video " + e.video.string() + " has " +
                                        std::to_string(e.frames) + " frames, fewer than " +
                                        std::to_string(policy.min_frames()));
        }
    }
}

DatasetManifest build_manifest(const fs::path& root, const SamplingPolicy& policy) {
    policy.validate();
    if (!fs::is_directory(root)) throw std::runtime_error("dataset root not found: " + root.string());
    DatasetManifest m;
    std::map<std::string, std::string> seen;  // video name -> class
    for (const auto& class_dir : sorted_subdirs(root)) {
        const std::string cls = class_dir.filename().string();
        const int label = m.classes();
        int usable = 0;
        for (const auto& video : sorted_subdirs(class_dir)) {
            const std::string name = video.filename().string();
            if (auto it = seen.find(name); it != seen.end()) {
                throw std::runtime_error("duplicate video id '" + name + "' in classes '" + it->second +
                                         "' and '" + cls + "'");
            }
            seen.emplace(name, cls);
            const int frames = static_cast<int>(list_frames(video).size());
            if (frames < policy.min_frames()) {
                warn("skipping " + video.string() + ": " + std::to_string(frames) + " frames");
                continue;
            }
            m.entries.push_back({label, video, frames, subject_of(name)});
            ++usable;
        }
        if (usable == 0) throw std::runtime_error("class '" + cls + "' has no usable videos");
        m.class_names.push_back(cls);
    }
    if (m.class_names.empty()) throw std::runtime_error("no class directories under " + root.string());
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    std::ostringstream os;
    for (const auto& e : manifest.entries) {
        os << manifest.class_names.at(e.label) << '\t' << e.video.string() << '\t' << e.frames << '\t'
           << e.subject << '\n';
    }
    write_file(path, os.str());
}

DatasetManifest read_manifest(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("manifest not found: " + path.string());
    std::istringstream is(read_file(path));
    DatasetManifest m;
    std::map<std::string, int> index;
    const fs::path base = path.parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
            cols.push_back(line.substr(start, tab - start));
        }
        cols.push_back(line.substr(start));
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (cols.size() < 3 || cols.size() > 4) {
            throw format_error(where + ": expected 3 or 4 tab-separated fields");
        }
        ManifestEntry e;
        auto [it, inserted] = index.emplace(cols[0], m.classes());
        if (inserted) m.class_names.push_back(cols[0]);
        e.label = it->second;
        e.video = cols[1];
        if (e.video.is_relative()) e.video = base / e.video;
        try {
            std::size_t used = 0;
            e.frames = std::stoi(cols[2], &used);
            if (used != cols[2].size()) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw format_error(where + ": bad frame count '" + cols[2] + "'");
        }
        e.subject = cols.size() == 4 ? cols[3] : subject_of(e.video.filename().string());
        m.entries.push_back(std::move(e));
    }
    return m;
}

ManifestSplit split_manifest(const DatasetManifest& manifest, const SplitOptions& opts) {
    if (opts.train < 0 || opts.val < 0 || opts.train + opts.val > 1.0 + 1e-12) {
        throw std::invalid_argument("split ratios must be non-negative and sum to at most 1");
    }
    ManifestSplit out;
    out.train.class_names = out.val.class_names = out.test.class_names = manifest.class_names;
    Rng rng(opts.seed);

    auto cut = [&](std::size_t n) {
        const auto a = static_cast<std::size_t>(std::llround(opts.train * static_cast<double>(n)));
        const auto b = std::min(n, a + static_cast<std::size_t>(std::llround(opts.val * static_cast<double>(n))));
        return std::pair{std::min(a, n), b};
    };

    if (opts.mode == SplitMode::random) {
        for (int c = 0; c < manifest.classes(); ++c) {
            std::vector<std::size_t> idx;
            for (std::size_t k = 0; k < manifest.entries.size(); ++k) {
                if (manifest.entries[k].label == c) idx.push_back(k);
            }
            rng.shuffle(std::span<std::size_t>(idx));
            const auto [a, b] = cut(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) {
                auto& side = k < a ? out.train : k < b ? out.val : out.test;
                side.entries.push_back(manifest.entries[idx[k]]);
            }
        }
        return out;
    }

    std::vector<std::string> subjects;
    for (const auto& e : manifest.entries) {
        if (std::find(subjects.begin(), subjects.end(), e.subject) == subjects.end()) {
            subjects.push_back(e.subject);
        }
    }
    std::sort(subjects.begin(), subjects.end());
    std::map<std::string, int> side;  // 0 train, 1 val, 2 test
    if (!opts.test_subjects.empty()) {
        const std::set<std::string> test(opts.test_subjects.begin(), opts.test_subjects.end());
        std::vector<std::string> rest;
        for (const auto& s : subjects) {
            if (test.count(s)) {
                side[s] = 2;
            } else {
                rest.push_back(s);
            }
        }
        rng.shuffle(std::span<std::string>(rest));
        const double tv = opts.train + opts.val;
        const auto a = tv > 0 ? static_cast<std::size_t>(std::llround(opts.train / tv * static_cast<double>(rest.size())))
                              : rest.size();
        for (std::size_t k = 0; k < rest.size(); ++k) side[rest[k]] = k < a ? 0 : 1;
    } else {
        rng.shuffle(std::span<std::string>(subjects));
        const auto [a, b] = cut(subjects.size());
        for (std::size_t k = 0; k < subjects.size(); ++k) side[subjects[k]] = k < a ? 0 : k < b ? 1 : 2;
    }
    for (const auto& e : manifest.entries) {
        const int s = side.at(e.subject);
        (s == 0 ? out.train : s == 1 ? out.val : out.test).entries.push_back(e);
    }
    return out;
}

std::vector<Clip> load_clips(const DatasetManifest& manifest, const SamplingPolicy& policy, int width,
                             int height) {
    policy.validate();
    const auto n = static_cast<std::ptrdiff_t>(manifest.entries.size());
    std::vector<std::vector<Clip>> per_video(manifest.entries.size());
    std::vector<std::string> errors(manifest.entries.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        try {
            const auto& e = manifest.entries[k];
            std::vector<GrayImage> frames;
            for (const auto& f : list_frames(e.video)) {
                frames.push_back(resize_bilinear(load_frame(f), width, height));
            }
            per_video[k] = sample_clips(frames, policy, e.label);
        } catch (const std::exception& ex) {
            errors[k] = ex.what();
        }
    }
    for (const auto& err : errors) {
        if (!err.empty()) throw std::runtime_error(err);
    }
    std::vector<Clip> out;
    for (auto& v : per_video) {
        for (auto& c : v) out.push_back(std::move(c));
    }
    return out;
}

namespace {
constexpr std::string_view kClipMagic = "3DPC";
constexpr std::uint32_t kClipVersion = 1;
}  // namespace

void save_clips(const fs::path& path, const std::vector<Clip>& clips) {
    ByteWriter w;
    w.bytes(kClipMagic);
    w.u32(kClipVersion);
    w.u64(clips.size());
    for (const auto& c : clips) {
        c.validate();
        w.i32(c.width);
        w.i32(c.height);
        w.i32(c.frames);
        w.i32(c.label.value_or(-1));
        for (const float v : c.data) w.f32(v);
    }
    write_file(path, w.data());
}

std::vector<Clip> load_clip_archive(const fs::path& path) {
    const std::string raw = read_file(path);
    ByteReader r(raw);
    if (raw.size() < 4 || r.bytes(4) != kClipMagic) throw format_error(path.string() + ": not a clip archive");
    if (const auto v = r.u32(); v != kClipVersion) {
        throw format_error(path.string() + ": unsupported clip archive version " + std::to_string(v));
    }
    const auto count = r.u64();
    std::vector<Clip> out;
    for (std::uint64_t k = 0; k < count; ++k) {
        const int w = r.i32(), h = r.i32(), t = r.i32(), label = r.i32();
        if (w <= 0 || h <= 0 || t <= 0) throw format_error(path.string() + ": bad clip extent");
        const std::size_t n = static_cast<std::size_t>(w) * h * t;
        if (r.remaining() < 4 * n) throw format_error(path.string() + ": truncated clip archive");
        std::vector<float> data(n);
        for (auto& v : data) v = r.f32();
        out.emplace_back(w, h, t, std::move(data), label >= 0 ? std::optional<int>(label) : std::nullopt);
    }
    return out;
}

bool is_clip_archive(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    char magic[4] = {};
    is.read(magic, 4);
    return is.gcount() == 4 && std::string_view(magic, 4) == kClipMagic;
}

}  // namespace pyranet
