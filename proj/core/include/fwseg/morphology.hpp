#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fwseg/grid.hpp"

namespace fwseg {

/// Euclidean disk {(dy, dx) : dy^2 + dx^2 <= r^2}.
struct StructuringElement {
    int radius = 0;
    std::vector<std::pair<int, int>> offsets;  // (dy, dx), raster order

    static StructuringElement disk(int radius);
};

// Out-of-image pixels count as 0 for both dilate and erode.
BinaryGrid dilate(const BinaryGrid& grid, int radius);
BinaryGrid erode(const BinaryGrid& grid, int radius);

/// Zhang-Suen thinning. Deletions inside a sub-iteration are applied in raster
/// order and re-checked against the partially thinned image, which keeps every
/// 8-connected component alive (plain parallel Zhang-Suen erases 2x2 blocks).
BinaryGrid skeletonize(const BinaryGrid& grid);

/// 1-pixels whose 8-neighborhood contains a 0. Out-of-image neighbors take the
/// center's value, so the frame never produces contour.
BinaryGrid contour_pixels(const BinaryGrid& grid);

/// Keeps a contiguous arc of ceil(proportion * length) pixels per connected
/// contour component. Arc starts depend only on the seed, so for one seed a
/// smaller proportion always selects a subset of a larger one.
BinaryGrid sample_contour_fraction(const BinaryGrid& contour, double proportion, std::uint64_t seed);

/// 8-connected components, each a list of linear pixel indices in raster order.
/// Components are ordered by their first pixel.
std::vector<std::vector<std::size_t>> connected_components(const BinaryGrid& grid);

/// Deterministic depth-first walk over one 8-connected component, starting at
/// its first raster pixel and preferring 4-neighbors. Consecutive entries are
/// neighbors except where the walk backtracks.
std::vector<std::size_t> trace_component(const BinaryGrid& grid, const std::vector<std::size_t>& component);

}  // namespace fwseg
