#include "pyranet/tensor.hpp"

#include "pyranet/rng.hpp"

#include <cmath>

namespace pyranet {

std::string Shape::str() const {
    return std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(maps) +
           "x" + std::to_string(sets);
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (const T v : t.values()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template bool all_finite(const Tensor<float>&);
template bool all_finite(const Tensor<double>&);

Clip::Clip(int w, int h, int t, std::vector<float> values, std::optional<int> lbl)
    : width(w), height(h), frames(t), data(std::move(values)), label(lbl) {
    validate();
}

void Clip::validate() const {
    if (width < 1 || height < 1 || frames < 1) {
        throw shape_error("clip extent must be positive, got " + shape().str());
    }
    if (data.size() != static_cast<std::size_t>(width) * height * frames) {
        throw shape_error("clip data length " + std::to_string(data.size()) +
                          " does not match " + shape().str());
    }
    for (const float v : data) {
        if (!std::isfinite(v)) throw shape_error("clip contains a non-finite value");
    }
}

void LayerGeometry::validate() const {
    if (rf < 1) throw geometry_error("receptive field must be >= 1, got " + std::to_string(rf));
    if (overlap < 0 || overlap >= rf) {
        throw geometry_error("overlap must satisfy 0 <= O < r, got O=" + std::to_string(overlap) +
                             " r=" + std::to_string(rf));
    }
    if (depth < 1) throw geometry_error("temporal depth must be >= 1");
    if (temporal_stride < 1) throw geometry_error("temporal stride must be >= 1");
}

int output_shape(int in_dim, const LayerGeometry& geom) {
    geom.validate();
    if (in_dim < geom.rf) {
        throw geometry_error("input extent " + std::to_string(in_dim) +
                             " is smaller than receptive field " + std::to_string(geom.rf));
    }
    return (in_dim - geom.rf) / geom.stride() + 1;
}

int temporal_output_shape(int in_maps, const LayerGeometry& geom) {
    geom.validate();
    if (in_maps < geom.depth) {
        throw geometry_error("input has " + std::to_string(in_maps) +
                             " maps, fewer than temporal depth " + std::to_string(geom.depth));
    }
    return (in_maps - geom.depth) / geom.temporal_stride + 1;
}

Window receptive_field_range(int u, int v, int z, const LayerGeometry& geom, const Extent& input) {
    const int out_rows = output_shape(input.rows, geom);
    const int out_cols = output_shape(input.cols, geom);
    const int out_maps = temporal_output_shape(input.maps, geom);
    if (u < 1 || u > out_rows || v < 1 || v > out_cols || z < 1 || z > out_maps) {
        throw geometry_error("output index (" + std::to_string(u) + "," + std::to_string(v) + "," +
                             std::to_string(z) + ") outside " + std::to_string(out_rows) + "x" +
                             std::to_string(out_cols) + "x" + std::to_string(out_maps));
    }
    const int g = geom.stride();
    const int G = geom.temporal_stride;
    return Window{
        {(u - 1) * g + 1, (u - 1) * g + geom.rf},
        {(v - 1) * g + 1, (v - 1) * g + geom.rf},
        {(z - 1) * G + 1, (z - 1) * G + geom.depth},
    };
}

IndexRange adjoint_range(int i, int window, int step, int out_dim) {
    int lo = ceil_div(i - window, step) + 1;
    int hi = floor_div(i - 1, step) + 1;
    if (lo < 1) lo = 1;
    if (hi > out_dim) hi = out_dim;
    return {lo, hi};
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace pyranet
