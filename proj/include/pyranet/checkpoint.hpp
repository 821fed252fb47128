#pragma once

#include "pyranet/bytes.hpp"
#include "pyranet/train.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pyranet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    NetworkModel<float> model;
    TrainState state;
    double lr = 0.0;  // rate of the last completed epoch
    std::vector<std::string> class_names;
};

// Layout (all little-endian):
//   "3DPN"  u32 version
//   topology: input width/height/maps/sets (i32), layer count (u32), then per
//             layer kind (u8), rf, overlap, depth, temporal stride, sets,
//             out_classes (i32), activation (u8) and slope (f64)
//   params:   per layer weight count (u64), weights (f32), bias count (u64),
//             biases (f32), in storage order
//   state:    next epoch (i32), lr (f64), rng state (u64), best val (f64),
//             stale epochs (i32)
//   class names: count (u32), then length-prefixed strings
//   u32 CRC-32 of every preceding byte
[[nodiscard]] std::string serialize_checkpoint(const Checkpoint& ck);
[[nodiscard]] Checkpoint parse_checkpoint(std::string_view bytes);

// Writes through a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws format_error unless the checkpoint holds exactly this topology.
void check_topology(const Checkpoint& ck, const Shape& input, const std::vector<LayerSpec>& specs);

}  // namespace pyranet
