#include <doctest.h>

#include <random>

#include "fwseg/morphology.hpp"
#include "support/fixtures.hpp"

using namespace fwseg;
using fwseg::test::filled_rect;
using fwseg::test::parse_grid;
using fwseg::test::random_grid;
using fwseg::test::render;

namespace {

BinaryGrid single_pixel(int h, int w, int y, int x) {
    BinaryGrid g(h, w, 0);
    g(y, x) = 1;
    return g;
}

// Brute-force oracles, written independently of the library loops.
BinaryGrid oracle_dilate(const BinaryGrid& g, int r) {
    BinaryGrid out(g.height(), g.width(), 0);
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            for (int yy = 0; yy < g.height(); ++yy)
                for (int xx = 0; xx < g.width(); ++xx)
                    if (g(yy, xx) && (yy - y) * (yy - y) + (xx - x) * (xx - x) <= r * r) out(y, x) = 1;
    return out;
}

BinaryGrid oracle_erode(const BinaryGrid& g, int r) {
    BinaryGrid out(g.height(), g.width(), 0);
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            bool all = true;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dy * dy + dx * dx <= r * r) all = all && g.contains(y + dy, x + dx) && g(y + dy, x + dx);
            out(y, x) = all;
        }
    }
    return out;
}

BinaryGrid oracle_contour(const BinaryGrid& g) {
    BinaryGrid out(g.height(), g.width(), 0);
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            bool has0 = false;
            bool has1 = false;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int v = g.contains(y + dy, x + dx) ? g(y + dy, x + dx) : g(y, x);
                    (v ? has1 : has0) = true;
                }
            }
            out(y, x) = g(y, x) && has0 && has1;
        }
    }
    return out;
}

bool is_one_pixel_wide(const BinaryGrid& g) {
    for (int y = 0; y + 1 < g.height(); ++y)
        for (int x = 0; x + 1 < g.width(); ++x)
            if (g(y, x) && g(y + 1, x) && g(y, x + 1) && g(y + 1, x + 1)) return false;
    return true;
}

}  // namespace

TEST_SUITE("morphology") {
    TEST_CASE("disk of radius 1 is the plus shape") {
        const auto d = dilate(single_pixel(5, 5, 2, 2), 1);
        CHECK(render(d) == std::vector<std::string>{".....", "..#..", ".###.", "..#..", "....."});
    }

    TEST_CASE("disk of radius 2 holds 13 pixels") {
        int expected = 0;
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx) expected += dy * dy + dx * dx <= 4;
        REQUIRE(expected == 13);
        const auto d = dilate(single_pixel(7, 7, 3, 3), 2);
        CHECK(count_ones(d) == 13);
        CHECK(StructuringElement::disk(2).offsets.size() == 13);
        CHECK(d == oracle_dilate(single_pixel(7, 7, 3, 3), 2));
    }

    TEST_CASE("empty grid is a fixed point") {
        BinaryGrid z(6, 6, 0);
        for (int r = 1; r <= 3; ++r) {
            CHECK(dilate(z, r) == z);
            CHECK(erode(z, r) == z);
        }
    }

    TEST_CASE("non-positive radius is rejected") {
        BinaryGrid g(4, 4, 1);
        CHECK_THROWS_AS(dilate(g, 0), ParameterError);
        CHECK_THROWS_AS(erode(g, -1), ParameterError);
        CHECK_THROWS_AS(StructuringElement::disk(0), ParameterError);
    }

    TEST_CASE("erosion of the all-one grid peels the border") {
        BinaryGrid ones(9, 9, 1);
        const auto e = erode(ones, 1);
        CHECK(e == filled_rect(9, 9, 1, 1, 7, 7));
    }

    TEST_CASE("erosion removes an isolated pixel") { CHECK(count_ones(erode(single_pixel(5, 5, 2, 2), 1)) == 0); }

    TEST_CASE("erosion of a 5x5 square keeps the cells with a full plus neighborhood") {
        const auto sq = filled_rect(9, 9, 2, 2, 5, 5);
        const auto e = erode(sq, 1);
        CHECK(e == oracle_erode(sq, 1));
        CHECK(e == filled_rect(9, 9, 3, 3, 3, 3));
    }

    TEST_CASE("dilate and erode match brute force on random grids") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const auto g = random_grid(rng, 12, 10, 0.3 + 0.02 * trial);
            for (int r = 1; r <= 3; ++r) {
                CHECK(dilate(g, r) == oracle_dilate(g, r));
                CHECK(erode(g, r) == oracle_erode(g, r));
            }
        }
    }

    TEST_CASE("a thin line is its own skeleton") {
        const auto line = filled_rect(5, 26, 2, 3, 1, 20);
        CHECK(skeletonize(line) == line);
    }

    TEST_CASE("skeleton of an empty grid is empty") {
        BinaryGrid z(8, 8, 0);
        CHECK(skeletonize(z) == z);
    }

    TEST_CASE("skeleton of a 21x5 rectangle is its middle row") {
        const auto rect = filled_rect(9, 25, 2, 2, 5, 21);
        const auto sk = skeletonize(rect);
        CHECK(is_subset(sk, rect));
        CHECK(is_one_pixel_wide(sk));
        CHECK(connected_components(sk).size() == 1);
        // Golden output: row 4, columns 3..20 (the thinning trims one pixel at each end).
        CHECK(sk == filled_rect(9, 25, 4, 3, 1, 18));
    }

    TEST_CASE("skeleton keeps a 2x2 block alive") {
        const auto block = filled_rect(6, 6, 2, 2, 2, 2);
        const auto sk = skeletonize(block);
        CHECK(count_ones(sk) >= 1);
        CHECK(is_subset(sk, block));
    }

    TEST_CASE("contour of a 5x5 square is its 16 perimeter pixels") {
        const auto sq = filled_rect(9, 9, 2, 2, 5, 5);
        const auto c = contour_pixels(sq);
        CHECK(c == oracle_contour(sq));
        CHECK(count_ones(c) == 16);
        BinaryGrid perimeter = sq;
        for (int y = 3; y <= 5; ++y)
            for (int x = 3; x <= 5; ++x) perimeter(y, x) = 0;
        CHECK(c == perimeter);
    }

    TEST_CASE("contour of a uniform grid is empty") {
        CHECK(count_ones(contour_pixels(BinaryGrid(7, 5, 1))) == 0);
        CHECK(count_ones(contour_pixels(BinaryGrid(7, 5, 0))) == 0);
    }

    TEST_CASE("an isolated pixel is its own contour") {
        const auto p = single_pixel(5, 5, 1, 3);
        CHECK(contour_pixels(p) == p);
    }

    TEST_CASE("contour matches brute force on random grids") {
        std::mt19937_64 rng(9);
        for (int trial = 0; trial < 30; ++trial) {
            const auto g = random_grid(rng, 11, 13, 0.5);
            CHECK(contour_pixels(g) == oracle_contour(g));
        }
    }

    TEST_CASE("full proportion returns the whole contour") {
        const auto c = contour_pixels(filled_rect(12, 12, 2, 2, 8, 8));
        for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) CHECK(sample_contour_fraction(c, 1.0, seed) == c);
    }

    TEST_CASE("a quarter of a 40-pixel ring is a contiguous 10-pixel arc") {
        const auto ring = contour_pixels(filled_rect(14, 14, 1, 1, 11, 11));
        REQUIRE(count_ones(ring) == 40);
        const auto arc = sample_contour_fraction(ring, 0.25, 42);
        CHECK(count_ones(arc) == 10);
        CHECK(is_subset(arc, ring));
        CHECK(connected_components(arc).size() == 1);
        // Golden arc for seed 42: across the top edge and down the right edge.
        CHECK(render(arc)[1] == "......######..");
        for (int y = 2; y <= 5; ++y) CHECK(arc(y, 11) == 1);
    }

    TEST_CASE("empty contour samples to an empty grid") {
        BinaryGrid z(6, 6, 0);
        CHECK(sample_contour_fraction(z, 0.3, 1) == z);
    }

    TEST_CASE("proportion outside (0, 1] is rejected") {
        BinaryGrid z(6, 6, 0);
        CHECK_THROWS_AS(sample_contour_fraction(z, 0.0, 1), ParameterError);
        CHECK_THROWS_AS(sample_contour_fraction(z, 1.5, 1), ParameterError);
    }

    TEST_CASE("each contour component gets its own arc") {
        BinaryGrid two = filled_rect(12, 24, 2, 2, 6, 6);
        const auto other = filled_rect(12, 24, 2, 14, 6, 6);
        for (std::size_t i = 0; i < two.size(); ++i) two[i] |= other[i];
        const auto c = contour_pixels(two);
        REQUIRE(connected_components(c).size() == 2);
        const auto arc = sample_contour_fraction(c, 0.1, 3);
        CHECK(connected_components(arc).size() == 2);
        CHECK(count_ones(arc) == 4);  // ceil(0.1 * 20) per component
    }

    TEST_CASE("trace visits every component pixel once") {
        const auto g = parse_grid({"##...", ".#..#", ".####", "....."});
        const auto comps = connected_components(g);
        REQUIRE(comps.size() == 1);
        const auto order = trace_component(g, comps[0]);
        CHECK(order.size() == comps[0].size());
        CHECK(order.front() == comps[0].front());
    }
}
