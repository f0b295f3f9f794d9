#include <doctest.h>

#include <random>
#include <set>

#include "fwseg/episodic.hpp"
#include "fwseg/losses.hpp"
#include "fwseg/morphology.hpp"
#include "fwseg/synth.hpp"
#include "fwseg/weak_labels.hpp"
#include "support/fixtures.hpp"

using namespace fwseg;
using fwseg::test::random_shape_mask;

namespace {

constexpr AnnotationStyle kStyles[] = {AnnotationStyle::Points, AnnotationStyle::Grid, AnnotationStyle::Scribbles,
                                       AnnotationStyle::Skeleton};

BinaryGrid unite(const BinaryGrid& a, const BinaryGrid& b) {
    BinaryGrid out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] | b[i];
    return out;
}

}  // namespace

TEST_SUITE("properties") {
    TEST_CASE("dilation and erosion bracket the input and grow monotonically") {
        std::mt19937_64 rng(101);
        for (int trial = 0; trial < 60; ++trial) {
            const auto a = fwseg::test::random_grid(rng, 12 + trial % 7, 10 + trial % 5, 0.3 + 0.01 * (trial % 30));
            const int r = 1 + trial % 3;
            CHECK(is_subset(a, dilate(a, r)));
            CHECK(is_subset(erode(a, r), a));
            CHECK(is_subset(dilate(a, r), dilate(a, r + 1)));
            CHECK(is_subset(erode(a, r + 1), erode(a, r)));
            CHECK(is_subset(skeletonize(a), a));
            CHECK(is_subset(contour_pixels(a), a));
            // opening is anti-extensive; closing is extensive away from the frame
            CHECK(is_subset(dilate(erode(a, r), r), a));
            const auto closed = erode(dilate(a, r), r);
            for (int y = r; y < a.height() - r; ++y)
                for (int x = r; x < a.width() - r; ++x) CHECK((!a(y, x) || closed(y, x)));
        }
    }

    TEST_CASE("dilation distributes over union") {
        std::mt19937_64 rng(102);
        for (int trial = 0; trial < 30; ++trial) {
            const auto a = fwseg::test::random_grid(rng, 14, 14, 0.1);
            const auto b = fwseg::test::random_grid(rng, 14, 14, 0.1);
            CHECK(dilate(unite(a, b), 2) == unite(dilate(a, 2), dilate(b, 2)));
        }
    }

    TEST_CASE("contour fractions stay on the contour and grow with the proportion") {
        std::mt19937_64 rng(103);
        for (int trial = 0; trial < 40; ++trial) {
            const auto c = contour_pixels(random_shape_mask(rng, 32));
            const auto lo = sample_contour_fraction(c, 0.2, trial);
            const auto hi = sample_contour_fraction(c, 0.6, trial);
            CHECK(is_subset(lo, c));
            CHECK(count_ones(lo) <= count_ones(hi));
            CHECK(sample_contour_fraction(c, 1.0, trial) == c);
        }
    }

    TEST_CASE("every sparsification agrees with the dense mask and is reproducible") {
        std::mt19937_64 rng(104);
        int feasible = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const auto dense = random_shape_mask(rng, 24 + 8 * (trial % 3));
            const auto style = kStyles[trial % 4];
            const auto p = sample_sparsity_params(style, Phase::Train, rng());
            try {
                const auto w = sparsify(dense, p);
                ++feasible;
                CHECK(integrity_violations(dense, w) == 0);
                CHECK(sparsify(dense, p) == w);
                const auto pos = fwseg::test::labeled_as(w, Label::Positive);
                const auto neg = fwseg::test::labeled_as(w, Label::Negative);
                CHECK(is_subset(pos, dense));
                for (std::size_t i = 0; i < dense.size(); ++i) CHECK_FALSE((neg[i] && dense[i]));
            } catch (const InfeasibleSparsity&) {
            }
        }
        CHECK(feasible > 150);
    }

    TEST_CASE("denser point and scribble annotations contain sparser ones") {
        std::mt19937_64 rng(105);
        for (int trial = 0; trial < 40; ++trial) {
            const auto dense = random_shape_mask(rng, 32);
            const std::uint64_t seed = rng();
            try {
                SparsityParams few{.style = AnnotationStyle::Points, .n_pix = 2, .radius = 0, .seed = seed};
                SparsityParams many = few;
                many.n_pix = 6;
                const auto a = sparsify(dense, few);
                const auto b = sparsify(dense, many);
                for (auto l : {Label::Positive, Label::Negative}) {
                    CHECK(is_subset(fwseg::test::labeled_as(a, l), fwseg::test::labeled_as(b, l)));
                }
            } catch (const InfeasibleSparsity&) {
            }
            SparsityParams thin{.style = AnnotationStyle::Scribbles, .radius = 0, .proportion = 0.2, .seed = seed};
            SparsityParams thick = thin;
            thick.proportion = 0.7;
            try {
                const auto a = sparsify(dense, thin);
                const auto b = sparsify(dense, thick);
                CHECK(count_label(a, Label::Positive) <= count_label(b, Label::Positive));
                CHECK(count_label(a, Label::Negative) <= count_label(b, Label::Negative));
            } catch (const InfeasibleSparsity&) {
            }
        }
    }

    TEST_CASE("a larger radius labels at least as many pixels") {
        std::mt19937_64 rng(106);
        for (int trial = 0; trial < 40; ++trial) {
            const auto dense = random_shape_mask(rng, 32);
            SparsityParams p = sample_sparsity_params(kStyles[trial % 4], Phase::Train, rng());
            p.radius = 0;
            SparsityParams q = p;
            q.radius = 2;
            try {
                const auto a = sparsify(dense, p);
                const auto b = sparsify(dense, q);
                const auto known = [](const WeakMask& w) { return w.size() - count_label(w, Label::Unknown); };
                CHECK(known(a) <= known(b));
            } catch (const InfeasibleSparsity&) {
            }
        }
    }

    TEST_CASE("episodes are disjoint and never touch the holdout") {
        SynthSpec spec;
        spec.families = {"ellipses", "rectangles", "rings"};
        spec.regimes = {"contrast", "grain"};
        spec.samples_per_task = 8;
        spec.image_size = 32;
        const auto meta = synth_meta_dataset(spec);
        EpisodeOptions opts;
        opts.query_size = 3;
        opts.preprocess = {.resize_to = 36, .crop_to = 32, .deploy_size = 32};
        std::set<std::string> seen;
        for (std::uint64_t s = 0; s < 60; ++s) {
            const auto style = kStyles[s % 4];
            const auto ep = sample_episode(meta, 1 + static_cast<int>(s % 3), style, Phase::Train, s, opts);
            CHECK(is_disjoint(ep));
            CHECK(ep.task_id.rfind("rings/", 0) != 0);
            seen.insert(ep.task_id);
            for (const auto& item : ep.support) {
                CHECK(item.weak.height() == 32);
                CHECK(count_label(item.weak, Label::Unknown) < item.weak.size());
            }
        }
        CHECK(seen.size() == 4);
    }

    TEST_CASE("loss and score stay in range") {
        std::mt19937_64 rng(107);
        for (int trial = 0; trial < 50; ++trial) {
            const auto a = random_shape_mask(rng, 16);
            const auto b = random_shape_mask(rng, 16);
            const auto s = iou(a, b);
            CHECK(s.mean_iou >= 0.0);
            CHECK(s.mean_iou <= 1.0);
            CHECK(iou(a, a).mean_iou == 1.0);
            Image p(16, 16);
            std::uniform_real_distribution<float> u(0.0f, 1.0f);
            for (auto& v : p.cells()) v = u(rng);
            CHECK(sce_loss(a, p) >= 0.0);
        }
    }
}
