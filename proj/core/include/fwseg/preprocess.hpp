#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "fwseg/grid.hpp"
#include "fwseg/weak_labels.hpp"

namespace fwseg {

struct PreprocessConfig {
    int resize_to = 140;  // meta-training resize before the random crop
    int crop_to = 128;
    int deploy_size = 128;
    int clahe_tiles = 8;
    double clahe_clip = 2.0;
};

/// One geometric augmentation, shared by every sample of a batch.
struct AugmentParams {
    int quarter_turns = 0;  // counter-clockwise multiples of 90 degrees
    bool flip_horizontal = false;
    bool flip_vertical = false;
    int crop_y = 0;
    int crop_x = 0;

    friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

AugmentParams draw_augment(std::uint64_t seed, const PreprocessConfig& cfg = {});

/// Contrast limited adaptive histogram equalization on the 8-bit quantized image.
Image clahe(const Image& image, int tiles = 8, double clip_limit = 2.0);

Image resize_bilinear(const Image& image, int height, int width);
BinaryGrid resize_nearest(const BinaryGrid& mask, int height, int width);

template <class T>
Grid<T> rotate_quarter(const Grid<T>& g, int turns);
template <class T>
Grid<T> flip(const Grid<T>& g, bool horizontal, bool vertical);
template <class T>
Grid<T> crop(const Grid<T>& g, int y0, int x0, int height, int width);

/// CLAHE, then geometric transform, resize and crop with explicit parameters.
std::pair<Image, DenseMask> preprocess_train(const Image& image, const DenseMask& mask, const AugmentParams& aug,
                                             const PreprocessConfig& cfg = {});
/// Same as above with parameters drawn from `seed`.
std::pair<Image, DenseMask> preprocess_train(const Image& image, const DenseMask& mask, std::uint64_t seed,
                                             const PreprocessConfig& cfg = {});

/// CLAHE then resize to deploy_size; no randomness.
Image preprocess_deploy(const Image& image, const PreprocessConfig& cfg = {});
DenseMask preprocess_deploy_mask(const DenseMask& mask, const PreprocessConfig& cfg = {});

/// Rounds to the nearest k/255; images stored on disk are 8-bit.
Image quantize_8bit(const Image& image);

// ---- template definitions ----

template <class T>
Grid<T> rotate_quarter(const Grid<T>& g, int turns) {
    turns = ((turns % 4) + 4) % 4;
    if (turns == 0) return g;
    const int h = g.height();
    const int w = g.width();
    Grid<T> out = (turns % 2 == 0) ? Grid<T>(h, w) : Grid<T>(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            switch (turns) {
                case 1: out(w - 1 - x, y) = g(y, x); break;
                case 2: out(h - 1 - y, w - 1 - x) = g(y, x); break;
                default: out(x, h - 1 - y) = g(y, x); break;
            }
        }
    }
    return out;
}

template <class T>
Grid<T> flip(const Grid<T>& g, bool horizontal, bool vertical) {
    if (!horizontal && !vertical) return g;
    Grid<T> out(g.height(), g.width());
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            const int sy = vertical ? g.height() - 1 - y : y;
            const int sx = horizontal ? g.width() - 1 - x : x;
            out(y, x) = g(sy, sx);
        }
    }
    return out;
}

template <class T>
Grid<T> crop(const Grid<T>& g, int y0, int x0, int height, int width) {
    if (y0 < 0 || x0 < 0 || y0 + height > g.height() || x0 + width > g.width()) {
        throw ShapeError("crop window exceeds the image");
    }
    Grid<T> out(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out(y, x) = g(y0 + y, x0 + x);
    }
    return out;
}

}  // namespace fwseg
