#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pyranet {

class shape_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class geometry_error : public shape_error {
public:
    using shape_error::shape_error;
};

// Extent of a 4-D feature stack. Storage is set-major, then map, then row,
// then column: index = ((set * maps + map) * height + row) * width + col.
struct Shape {
    int width = 0;
    int height = 0;
    int maps = 0;
    int sets = 0;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(width) * height * maps * sets;
    }
    [[nodiscard]] std::size_t map_size() const {
        return static_cast<std::size_t>(width) * height;
    }
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

// Dense 4-D container (width x height x maps x sets). Formulas in the docs are
// 1-based (u, v, z); storage is 0-based with row = u - 1, col = v - 1,
// map = z - 1.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{0}) : shape_(checked(shape)), data_(shape.size(), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.size()) {
            throw shape_error("tensor data length " + std::to_string(data_.size()) +
                              " does not match shape " + shape_.str());
        }
    }

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    [[nodiscard]] std::size_t index(int row, int col, int map, int set) const {
        return ((static_cast<std::size_t>(set) * shape_.maps + map) * shape_.height + row) *
                   shape_.width +
               col;
    }

    T& operator()(int row, int col, int map, int set = 0) { return data_[index(row, col, map, set)]; }
    const T& operator()(int row, int col, int map, int set = 0) const {
        return data_[index(row, col, map, set)];
    }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    [[nodiscard]] std::span<T> values() { return data_; }
    [[nodiscard]] std::span<const T> values() const { return data_; }
    [[nodiscard]] std::vector<T>& raw() { return data_; }
    [[nodiscard]] const std::vector<T>& raw() const { return data_; }

    // Contiguous slice holding one (map, set) plane.
    [[nodiscard]] std::span<T> plane(int map, int set) {
        return std::span<T>(data_).subspan(index(0, 0, map, set), shape_.map_size());
    }
    [[nodiscard]] std::span<const T> plane(int map, int set) const {
        return std::span<const T>(data_).subspan(index(0, 0, map, set), shape_.map_size());
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    [[nodiscard]] Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    static Shape checked(const Shape& s) {
        if (s.width < 0 || s.height < 0 || s.maps < 0 || s.sets < 0) {
            throw shape_error("negative tensor extent " + s.str());
        }
        return s;
    }

    Shape shape_{};
    std::vector<T> data_;
};

template <typename T>
[[nodiscard]] bool all_finite(const Tensor<T>& t);

// One grayscale video snippet. data is row-major and frame-contiguous, i.e.
// the same layout as a single-set Tensor of shape (width, height, frames, 1).
struct Clip {
    int width = 0;
    int height = 0;
    int frames = 0;
    std::vector<float> data;
    std::optional<int> label;

    Clip() = default;
    Clip(int w, int h, int t, std::vector<float> values, std::optional<int> lbl = std::nullopt);

    [[nodiscard]] Shape shape() const { return {width, height, frames, 1}; }
    [[nodiscard]] float at(int row, int col, int frame) const {
        return data[(static_cast<std::size_t>(frame) * height + row) * width + col];
    }
    template <typename T>
    [[nodiscard]] Tensor<T> to_tensor() const {
        std::vector<T> v(data.begin(), data.end());
        return Tensor<T>(shape(), std::move(v));
    }
    void validate() const;
};

// Receptive-field geometry: r x r spatial window, overlap O, temporal depth D
// and temporal stride G. Spatial stride is g = r - O.
struct LayerGeometry {
    int rf = 1;
    int overlap = 0;
    int depth = 1;
    int temporal_stride = 1;

    [[nodiscard]] int stride() const { return rf - overlap; }
    void validate() const;

    friend bool operator==(const LayerGeometry&, const LayerGeometry&) = default;
};

// floor((in_dim - r) / g) + 1.
[[nodiscard]] int output_shape(int in_dim, const LayerGeometry& geom);
// floor((in_maps - D) / G) + 1.
[[nodiscard]] int temporal_output_shape(int in_maps, const LayerGeometry& geom);

// Inclusive 1-based index range.
struct IndexRange {
    int lo = 1;
    int hi = 0;
    [[nodiscard]] bool empty() const { return hi < lo; }
    [[nodiscard]] int count() const { return empty() ? 0 : hi - lo + 1; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct Window {
    IndexRange rows;
    IndexRange cols;
    IndexRange maps;
};

// Input extent of the layer, used to validate the output index.
struct Extent {
    int rows = 0;
    int cols = 0;
    int maps = 0;
};

// Forward window of output neuron (u, v, z), all 1-based:
//   i in [(u-1)g + 1, (u-1)g + r], j likewise, m in [(z-1)G + 1, (z-1)G + D].
[[nodiscard]] Window receptive_field_range(int u, int v, int z, const LayerGeometry& geom,
                                           const Extent& input);

// Output indices whose window contains 1-based input index `i`, clamped to
// [1, out_dim]: [ceil((i - r)/g) + 1, floor((i - 1)/g) + 1].
[[nodiscard]] IndexRange adjoint_range(int i, int window, int step, int out_dim);

// Integer floor/ceil division that are correct for negative numerators.
[[nodiscard]] constexpr int floor_div(int a, int b) {
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}
[[nodiscard]] constexpr int ceil_div(int a, int b) { return -floor_div(-a, b); }

}  // namespace pyranet
