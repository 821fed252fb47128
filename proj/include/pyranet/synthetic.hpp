#pragma once

#include "pyranet/tensor.hpp"

#include <cstdint>
#include <vector>

namespace pyranet {

struct MovingBarOptions {
    int width = 16;
    int height = 12;
    int frames = 13;
    int per_class = 20;
    double noise = 0.05;  // std of additive Gaussian pixel noise
    std::uint64_t seed = 1;
};

// Three-class motion task. Class 0: a vertical bar sweeping left to right;
// class 1: the same bar sweeping right to left; class 2: a horizontal bar
// sweeping top to bottom. Start position, speed (1 or 2 px/frame when the
// clip allows it), bar thickness and brightness are drawn per clip; values
// are clamped to [0, 1]. Clips come out class-interleaved.
[[nodiscard]] std::vector<Clip> make_moving_bar_clips(const MovingBarOptions& opts);

}  // namespace pyranet
