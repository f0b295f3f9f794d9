#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fwseg/errors.hpp"

namespace fwseg {

/// Row-major H x W raster. Value type, cheap to copy for the sizes used here.
template <class T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
        if (height < 1 || width < 1) {
            throw ShapeError("grid dimensions must be positive, got " + std::to_string(height) + "x" +
                             std::to_string(width));
        }
        cells_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return cells_.size(); }
    bool empty() const noexcept { return cells_.empty(); }

    bool contains(int y, int x) const noexcept { return y >= 0 && y < height_ && x >= 0 && x < width_; }

    T& operator()(int y, int x) { return cells_[index(y, x)]; }
    const T& operator()(int y, int x) const { return cells_[index(y, x)]; }

    T& operator[](std::size_t i) { return cells_[i]; }
    const T& operator[](std::size_t i) const { return cells_[i]; }

    std::size_t index(int y, int x) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    std::span<T> cells() noexcept { return cells_; }
    std::span<const T> cells() const noexcept { return cells_; }

    bool same_shape(const Grid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }
    template <class U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return height_ == other.height() && width_ == other.width();
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.height_ == b.height_ && a.width_ == b.width_ && a.cells_ == b.cells_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<T> cells_;
};

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
    }
}

/// Cells are exactly 0 or 1.
using BinaryGrid = Grid<std::uint8_t>;

/// Grayscale image with intensities in [0, 1] (single channel).
using Image = Grid<float>;

inline std::size_t count_ones(const BinaryGrid& g) {
    std::size_t n = 0;
    for (auto v : g.cells()) n += v != 0;
    return n;
}

/// True when every 1 of `a` is also a 1 of `b`.
inline bool is_subset(const BinaryGrid& a, const BinaryGrid& b) {
    require_same_shape(a, b, "is_subset");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && !b[i]) return false;
    }
    return true;
}

}  // namespace fwseg
