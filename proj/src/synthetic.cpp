#include "pyranet/synthetic.hpp"

#include "pyranet/rng.hpp"

#include <algorithm>

namespace pyranet {

std::vector<Clip> make_moving_bar_clips(const MovingBarOptions& opts) {
    if (opts.width < 4 || opts.height < 4 || opts.frames < 2 || opts.per_class < 1) {
        throw std::invalid_argument("moving-bar clips need >= 4x4 pixels, >= 2 frames");
    }
    Rng rng(opts.seed);
    std::vector<Clip> clips;
    clips.reserve(static_cast<std::size_t>(opts.per_class) * 3);
    for (int k = 0; k < opts.per_class; ++k) {
        for (int label = 0; label < 3; ++label) {
            const bool horizontal = label == 2;
            const int extent = horizontal ? opts.height : opts.width;
            const int thickness = 1 + static_cast<int>(rng.below(2));
            const int travel = extent - thickness;
            const int speed = travel >= 2 * (opts.frames - 1) ? 1 + static_cast<int>(rng.below(2)) : 1;
            const double brightness = rng.uniform(0.6, 1.0);
            const double background = rng.uniform(0.0, 0.2);
            // Positions may run off the edge; the bar is simply clipped.
            const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, travel / 2))));

            std::vector<float> data(static_cast<std::size_t>(opts.width) * opts.height * opts.frames);
            for (int t = 0; t < opts.frames; ++t) {
                int pos = start + speed * t;
                if (label == 1) pos = extent - thickness - pos;
                for (int row = 0; row < opts.height; ++row) {
                    for (int col = 0; col < opts.width; ++col) {
                        const int coord = horizontal ? row : col;
                        double v = (coord >= pos && coord < pos + thickness) ? brightness : background;
                        v += opts.noise * rng.normal();
                        data[(static_cast<std::size_t>(t) * opts.height + row) * opts.width + col] =
                            static_cast<float>(std::clamp(v, 0.0, 1.0));
                    }
                }
            }
            clips.emplace_back(opts.width, opts.height, opts.frames, std::move(data), label);
        }
    }
    return clips;
}

}  // namespace pyranet
