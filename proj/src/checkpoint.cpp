#include "pyranet/checkpoint.hpp"

#include "pyranet/clip_io.hpp"

#include <zlib.h>

namespace fs = std::filesystem;

namespace pyranet {

namespace {

constexpr std::string_view kMagic = "3DPN";

std::uint32_t crc_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
    std::size_t left = bytes.size();
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, p, chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

void put_tensor(ByteWriter& w, const Tensor<float>& t) {
    w.u64(t.size());
    for (const float v : t.values()) w.f32(v);
}

Tensor<float> get_tensor(ByteReader& r, const Shape& shape, const std::string& what) {
    const auto n = r.u64();
    if (n != shape.size()) {
        throw format_error("checkpoint " + what + " holds " + std::to_string(n) + " values, topology needs " +
                           std::to_string(shape.size()));
    }
    if (r.remaining() < 4 * n) throw format_error("checkpoint truncated in " + what);
    std::vector<float> v(n);
    for (auto& x : v) x = r.f32();
    return Tensor<float>(shape, std::move(v));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
    ByteWriter w;
    w.bytes(kMagic);
    w.u32(kCheckpointVersion);
    const Shape in = ck.model.input_shape();
    w.i32(in.width);
    w.i32(in.height);
    w.i32(in.maps);
    w.i32(in.sets);
    const auto& layers = ck.model.layers();
    w.u32(static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
        const auto& s = l.spec;
        w.u8(static_cast<std::uint8_t>(s.kind));
        w.i32(s.geom.rf);
        w.i32(s.geom.overlap);
        w.i32(s.geom.depth);
        w.i32(s.geom.temporal_stride);
        w.i32(s.sets);
        w.i32(s.out_classes);
        w.u8(static_cast<std::uint8_t>(s.activation.type));
        w.f64(s.activation.slope);
    }
    for (const auto& l : layers) {
        put_tensor(w, l.params.weights);
        put_tensor(w, l.params.biases);
    }
    w.i32(ck.state.next_epoch);
    w.f64(ck.lr);
    w.u64(ck.state.rng_state);
    w.f64(ck.state.best_val);
    w.i32(ck.state.stale_epochs);
    w.u32(static_cast<std::uint32_t>(ck.class_names.size()));
    for (const auto& name : ck.class_names) w.str(name);
    w.u32(crc_of(w.data()));
    return w.take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
    if (bytes.size() < 12 || bytes.substr(0, 4) != kMagic) throw format_error("not a checkpoint (bad magic)");
    ByteReader r(bytes);
    r.bytes(4);
    if (const auto v = r.u32(); v != kCheckpointVersion) {
        throw format_error("checkpoint version " + std::to_string(v) + " is not supported (expected " +
                           std::to_string(kCheckpointVersion) + ")");
    }
    const std::string_view body = bytes.substr(0, bytes.size() - 4);
    ByteReader tail(bytes.substr(bytes.size() - 4));
    if (tail.u32() != crc_of(body)) throw format_error("checkpoint checksum mismatch");

    Shape in;
    in.width = r.i32();
    in.height = r.i32();
    in.maps = r.i32();
    in.sets = r.i32();
    const auto count = r.u32();
    if (count > 4096) throw format_error("implausible layer count in checkpoint");
    std::vector<LayerSpec> specs(count);
    for (auto& s : specs) {
        const auto kind = r.u8();
        if (kind > static_cast<std::uint8_t>(LayerKind::fc)) throw format_error("unknown layer kind in checkpoint");
        s.kind = static_cast<LayerKind>(kind);
        s.geom.rf = r.i32();
        s.geom.overlap = r.i32();
        s.geom.depth = r.i32();
        s.geom.temporal_stride = r.i32();
        s.sets = r.i32();
        s.out_classes = r.i32();
        const auto act = r.u8();
        if (act > static_cast<std::uint8_t>(Activation::lrelu)) throw format_error("unknown activation in checkpoint");
        s.activation.type = static_cast<Activation>(act);
        s.activation.slope = r.f64();
    }
    std::vector<Shape> shapes;
    try {
        shapes = chain_shapes(in, specs);
    } catch (const shape_error& e) {
        throw format_error(std::string("checkpoint topology is invalid: ") + e.what());
    }
    const auto names = layer_names(specs);
    std::vector<Layer<float>> layers;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const Shape& lin = shapes[l];
        const Shape& lout = shapes[l + 1];
        ParamSet<float> p;
        p.kind = specs[l].kind;
        p.weights = get_tensor(r, param_weight_shape(specs[l], lin, lout), names[l] + " weights");
        p.biases = get_tensor(r, param_bias_shape(specs[l], lin, lout), names[l] + " biases");
        layers.push_back({names[l], specs[l], std::move(p), lin, lout});
    }
    Checkpoint ck;
    ck.model = NetworkModel<float>::from_layers(in, std::move(layers));
    ck.state.next_epoch = r.i32();
    ck.lr = r.f64();
    ck.state.rng_state = r.u64();
    ck.state.best_val = r.f64();
    ck.state.stale_epochs = r.i32();
    const auto ncls = r.u32();
    for (std::uint32_t k = 0; k < ncls; ++k) ck.class_names.push_back(r.str());
    if (r.remaining() != 4) throw format_error("trailing bytes in checkpoint");
    return ck;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ck) {
    const auto tmp = fs::path(path.string() + ".tmp");
    write_file(tmp, serialize_checkpoint(ck));
    fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
    try {
        return parse_checkpoint(read_file(path));
    } catch (const format_error& e) {
        throw format_error(path.string() + ": " + e.what());
    }
}

void check_topology(const Checkpoint& ck, const Shape& input, const std::vector<LayerSpec>& specs) {
    if (ck.model.input_shape() != input) {
        throw format_error("checkpoint input " + ck.model.input_shape().str() + " does not match " + input.str());
    }
    const auto have = ck.model.specs();
    if (have.size() != specs.size()) {
        throw format_error("checkpoint has " + std::to_string(have.size()) + " layers, expected " +
                           std::to_string(specs.size()));
    }
    const auto names = layer_names(specs);
    for (std::size_t l = 0; l < specs.size(); ++l) {
        if (!(have[l] == specs[l])) throw format_error("checkpoint layer " + names[l] + " differs from the configured topology");
    }
}

}  // namespace pyranet
