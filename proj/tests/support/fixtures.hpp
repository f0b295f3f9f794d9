#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fwseg/grid.hpp"
#include "fwseg/weak_labels.hpp"

namespace fwseg::test {

inline BinaryGrid parse_grid(const std::vector<std::string>& rows) {
    BinaryGrid g(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()), 0);
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) g(y, x) = rows[y][x] == '#' ? 1 : 0;
    }
    return g;
}

inline std::vector<std::string> render(const BinaryGrid& g) {
    std::vector<std::string> rows;
    for (int y = 0; y < g.height(); ++y) {
        std::string r;
        for (int x = 0; x < g.width(); ++x) r += g(y, x) ? '#' : '.';
        rows.push_back(r);
    }
    return rows;
}

inline BinaryGrid filled_rect(int h, int w, int y0, int x0, int rh, int rw) {
    BinaryGrid g(h, w, 0);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) g(y, x) = 1;
    return g;
}

inline BinaryGrid filled_disk(int size, double cy, double cx, double r) {
    BinaryGrid g(size, size, 0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) g(y, x) = (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r;
    return g;
}

inline BinaryGrid random_grid(std::mt19937_64& rng, int h, int w, double density) {
    std::bernoulli_distribution on(density);
    BinaryGrid g(h, w, 0);
    for (auto& c : g.cells()) c = on(rng) ? 1 : 0;
    return g;
}

/// A random two-class mask made of a few overlapping rectangles and disks.
inline DenseMask random_shape_mask(std::mt19937_64& rng, int size) {
    DenseMask m(size, size, 0);
    std::uniform_int_distribution<int> count(1, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const double cy = u(rng) * size;
        const double cx = u(rng) * size;
        const double r = 2.0 + u(rng) * size * 0.3;
        const bool disk = u(rng) < 0.5;
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double dy = y - cy;
                const double dx = x - cx;
                const bool in = disk ? dy * dy + dx * dx <= r * r : std::abs(dy) <= r && std::abs(dx) <= r * 0.6;
                if (in) m(y, x) = 1;
            }
        }
    }
    return m;
}

inline BinaryGrid labeled_as(const WeakMask& w, Label l) {
    BinaryGrid g(w.height(), w.width(), 0);
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = w[i] == l;
    return g;
}

}  // namespace fwseg::test
