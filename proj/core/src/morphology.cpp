#include "fwseg/morphology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "fwseg/random.hpp"

namespace fwseg {

namespace {

// Walk preference: 4-neighbors first (E, S, W, N), then diagonals.
constexpr std::array<std::pair<int, int>, 8> kWalkOrder{{
    {0, 1}, {1, 0}, {0, -1}, {-1, 0}, {1, 1}, {1, -1}, {-1, -1}, {-1, 1},
}};

void require_radius(int radius, const char* op) {
    if (radius < 1) throw ParameterError(std::string(op) + ": radius must be >= 1, got " + std::to_string(radius));
}

// Zhang-Suen neighbor ring P2..P9 (N, NE, E, SE, S, SW, W, NW); outside is 0.
std::array<int, 8> ring(const BinaryGrid& g, int y, int x) {
    constexpr std::array<std::pair<int, int>, 8> offs{{
        {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1},
    }};
    std::array<int, 8> p{};
    for (int i = 0; i < 8; ++i) {
        const int yy = y + offs[i].first;
        const int xx = x + offs[i].second;
        p[i] = g.contains(yy, xx) ? g(yy, xx) : 0;
    }
    return p;
}

bool thinning_candidate(const BinaryGrid& g, int y, int x, int pass) {
    if (!g(y, x)) return false;
    const auto p = ring(g, y, x);
    int b = 0;
    int a = 0;
    for (int i = 0; i < 8; ++i) {
        b += p[i];
        a += (p[i] == 0 && p[(i + 1) % 8] == 1);
    }
    if (b < 2 || b > 6 || a != 1) return false;
    const int p2 = p[0], p4 = p[2], p6 = p[4], p8 = p[6];
    if (pass == 0) return p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0;
    return p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0;
}

}  // namespace

StructuringElement StructuringElement::disk(int radius) {
    require_radius(radius, "disk");
    StructuringElement se;
    se.radius = radius;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dy * dy + dx * dx <= radius * radius) se.offsets.emplace_back(dy, dx);
        }
    }
    return se;
}

BinaryGrid dilate(const BinaryGrid& grid, int radius) {
    require_radius(radius, "dilate");
    const auto se = StructuringElement::disk(radius);
    BinaryGrid out(grid.height(), grid.width(), 0);
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            if (!grid(y, x)) continue;
            for (auto [dy, dx] : se.offsets) {
                if (out.contains(y + dy, x + dx)) out(y + dy, x + dx) = 1;
            }
        }
    }
    return out;
}

BinaryGrid erode(const BinaryGrid& grid, int radius) {
    require_radius(radius, "erode");
    const auto se = StructuringElement::disk(radius);
    BinaryGrid out(grid.height(), grid.width(), 0);
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            if (!grid(y, x)) continue;
            bool all = true;
            for (auto [dy, dx] : se.offsets) {
                if (!grid.contains(y + dy, x + dx) || !grid(y + dy, x + dx)) {
                    all = false;
                    break;
                }
            }
            out(y, x) = all ? 1 : 0;
        }
    }
    return out;
}

BinaryGrid skeletonize(const BinaryGrid& grid) {
    BinaryGrid img = grid;
    std::vector<std::pair<int, int>> marked;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            marked.clear();
            for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) {
                    if (thinning_candidate(img, y, x, pass)) marked.emplace_back(y, x);
                }
            }
            for (auto [y, x] : marked) {
                if (thinning_candidate(img, y, x, pass)) {
                    img(y, x) = 0;
                    changed = true;
                }
            }
        }
    }
    return img;
}

BinaryGrid contour_pixels(const BinaryGrid& grid) {
    BinaryGrid out(grid.height(), grid.width(), 0);
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            if (!grid(y, x)) continue;
            bool mixed = false;
            for (int dy = -1; dy <= 1 && !mixed; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (grid.contains(y + dy, x + dx) && !grid(y + dy, x + dx)) {
                        mixed = true;
                        break;
                    }
                }
            }
            out(y, x) = mixed ? 1 : 0;
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> connected_components(const BinaryGrid& grid) {
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::uint8_t> seen(grid.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < grid.size(); ++start) {
        if (!grid[start] || seen[start]) continue;
        std::vector<std::size_t> comp;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            comp.push_back(i);
            const int y = static_cast<int>(i / grid.width());
            const int x = static_cast<int>(i % grid.width());
            for (auto [dy, dx] : kWalkOrder) {
                if (!grid.contains(y + dy, x + dx)) continue;
                const std::size_t j = grid.index(y + dy, x + dx);
                if (grid[j] && !seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

std::vector<std::size_t> trace_component(const BinaryGrid& grid, const std::vector<std::size_t>& component) {
    std::vector<std::size_t> order;
    if (component.empty()) return order;
    order.reserve(component.size());
    std::vector<std::uint8_t> member(grid.size(), 0);
    for (auto i : component) member[i] = 1;
    std::vector<std::uint8_t> visited(grid.size(), 0);
    std::vector<std::size_t> path{component.front()};
    visited[component.front()] = 1;
    order.push_back(component.front());
    while (!path.empty()) {
        const std::size_t cur = path.back();
        const int y = static_cast<int>(cur / grid.width());
        const int x = static_cast<int>(cur % grid.width());
        bool advanced = false;
        for (auto [dy, dx] : kWalkOrder) {
            if (!grid.contains(y + dy, x + dx)) continue;
            const std::size_t j = grid.index(y + dy, x + dx);
            if (member[j] && !visited[j]) {
                visited[j] = 1;
                order.push_back(j);
                path.push_back(j);
                advanced = true;
                break;
            }
        }
        if (!advanced) path.pop_back();
    }
    return order;
}

BinaryGrid sample_contour_fraction(const BinaryGrid& contour, double proportion, std::uint64_t seed) {
    if (!(proportion > 0.0 && proportion <= 1.0)) {
        throw ParameterError("sample_contour_fraction: proportion must be in (0, 1], got " + std::to_string(proportion));
    }
    BinaryGrid out(contour.height(), contour.width(), 0);
    Rng rng = make_rng(seed);
    for (const auto& comp : connected_components(contour)) {
        const auto order = trace_component(contour, comp);
        const std::size_t len = order.size();
        // Draw the start before looking at the proportion so arcs nest across proportions.
        const std::size_t start = std::uniform_int_distribution<std::size_t>(0, len - 1)(rng);
        auto keep = static_cast<std::size_t>(std::ceil(proportion * static_cast<double>(len) - 1e-9));
        keep = std::min(std::max<std::size_t>(keep, 1), len);
        for (std::size_t k = 0; k < keep; ++k) out[order[(start + k) % len]] = 1;
    }
    return out;
}

}  // namespace fwseg
