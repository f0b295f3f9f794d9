#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "fwseg/learner.hpp"
#include "fwseg/losses.hpp"
#include "fwseg/meta_fusion.hpp"
#include "fwseg/tensors.hpp"
#include "support/episodes.hpp"

using namespace fwseg;
using torch::indexing::Slice;

namespace {

Eigen::MatrixXd to_eigen(const torch::Tensor& t) {
    auto c = t.to(torch::kFloat64).contiguous();
    Eigen::MatrixXd m(c.size(0), c.size(1));
    for (std::int64_t i = 0; i < c.size(0); ++i)
        for (std::int64_t j = 0; j < c.size(1); ++j) m(i, j) = c[i][j].item<double>();
    return m;
}

torch::Tensor random_labels(std::int64_t n, std::mt19937_64& rng) {
    auto y = torch::zeros({n, 2}, torch::kFloat64);
    std::bernoulli_distribution pos(0.5);
    for (std::int64_t i = 0; i < n; ++i) y[i][pos(rng) ? 1 : 0] = 1.0;
    y[0][0] = 1.0;
    y[0][1] = 0.0;
    if (n > 1) {
        y[1][0] = 0.0;
        y[1][1] = 1.0;
    }
    return y;
}

LearnerConfig fusion_cfg(const std::string& method) {
    LearnerConfig c;
    c.method = method;
    c.model = {.arch = Arch::MiniFcnRes, .width = 4};
    c.seed = 9;
    return c;
}

}  // namespace

TEST_SUITE("meta_fusion") {
    TEST_CASE("unit mask features give the spatial mean") {
        auto f = torch::randn({2, 3, 4, 5});
        CHECK(torch::allclose(fuse_support(f, torch::ones_like(f)), f.mean({0, 2, 3})));
        CHECK(torch::all(fuse_support(f, torch::zeros_like(f)) == 0).item<bool>());
        CHECK_THROWS_AS(fuse_support(f, torch::ones({2, 3, 4, 4})), ShapeError);
    }

    TEST_CASE("joint guidance of two shots is the mean of the separate ones") {
        auto f = torch::randn({2, 6, 5, 5}, torch::kFloat64);
        auto m = torch::randn({2, 6, 5, 5}, torch::kFloat64);
        auto g1 = fuse_support(f.narrow(0, 0, 1), m.narrow(0, 0, 1));
        auto g2 = fuse_support(f.narrow(0, 1, 1), m.narrow(0, 1, 1));
        CHECK(torch::allclose(fuse_support(f, m), (g1 + g2) / 2.0, 1e-12, 1e-12));
        CHECK(torch::allclose(fuse_support(f.flip({0}), m.flip({0})), fuse_support(f, m), 1e-12, 1e-12));
    }

    TEST_CASE("query fusion appends the tiled guidance") {
        auto q = torch::randn({2, 3, 4, 4});
        auto fused = fuse_query(q, torch::zeros({3}));
        CHECK(fused.size(1) == 6);
        CHECK(torch::equal(fused.narrow(1, 0, 3), q));
        CHECK(torch::all(fused.narrow(1, 3, 3) == 0).item<bool>());
        auto other = fuse_query(q, torch::tensor({1.0f, 2.0f, 3.0f}));
        CHECK(torch::equal(other.narrow(1, 0, 3), fused.narrow(1, 0, 3)));
        CHECK(other[1][4][2][3].item<float>() == 2.0f);
        CHECK_THROWS_AS(fuse_query(q, torch::zeros({4})), ShapeError);
    }

    TEST_CASE("ridge on a single unit vector") {
        auto x = torch::tensor({{1.0, 0.0, 0.0}}, torch::kFloat64);
        auto y = torch::tensor({{0.0, 1.0}}, torch::kFloat64);
        auto sol = r2d2_solve(x, y, 1.0);
        CHECK(torch::allclose(sol.weights.select(1, 1), torch::tensor({0.5, 0.0, 0.0}, torch::kFloat64)));
        CHECK(torch::all(sol.weights.select(1, 0) == 0).item<bool>());
    }

    TEST_CASE("heavy regularization drives logits to zero") {
        std::mt19937_64 rng(1);
        auto x = torch::randn({10, 4}, torch::kFloat64);
        auto sol = r2d2_solve(x, random_labels(10, rng), 1e9);
        auto logits = linear_head_logits(torch::randn({1, 4, 3, 3}), sol);
        CHECK(logits.abs().max().item<double>() < 1e-7);
    }

    TEST_CASE("ridge solution matches an Eigen normal-equations oracle") {
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 20; ++trial) {
            const std::int64_t n = trial % 2 ? 20 : 5;
            auto x = torch::randn({n, 8}, torch::kFloat64);
            auto y = random_labels(n, rng);
            const double lambda = 0.5 + trial * 0.1;
            Eigen::MatrixXd X = to_eigen(x);
            Eigen::MatrixXd Y = to_eigen(y);
            Eigen::MatrixXd A = X.transpose() * X + lambda * Eigen::MatrixXd::Identity(8, 8);
            Eigen::MatrixXd W = A.ldlt().solve(X.transpose() * Y);
            for (auto form : {RidgeForm::Auto, RidgeForm::Woodbury, RidgeForm::Primal}) {
                auto sol = r2d2_solve(x, y, lambda, form);
                CHECK((to_eigen(sol.weights) - W).cwiseAbs().maxCoeff() < 1e-5);
            }
        }
    }

    TEST_CASE("ridge gradients reach the features") {
        std::mt19937_64 rng(3);
        auto x = torch::randn({12, 5}, torch::kFloat64).requires_grad_(true);
        auto sol = r2d2_solve(x, random_labels(12, rng), 1.0);
        auto g = torch::autograd::grad({sol.weights.pow(2).sum()}, {x})[0];
        CHECK(g.norm().item<double>() > 0.0);
    }

    TEST_CASE("separable two-point SVM") {
        auto x = torch::tensor({{1.0, 0.0}, {-1.0, 0.0}}, torch::kFloat64);
        auto y = torch::tensor({{0.0, 1.0}, {1.0, 0.0}}, torch::kFloat64);
        SvmTrace trace;
        auto sol = metaoptnet_solve(x, y, 10.0, 50, &trace);
        auto w = sol.weights.select(1, 1) - sol.weights.select(1, 0);
        CHECK(w[0].item<double>() > 0.0);
        CHECK(w[1].item<double>() == 0.0);
        auto pts = x.t().reshape({1, 2, 1, 2});
        auto m = linear_head_logits(pts, sol);
        CHECK(m[0][1][0][0].item<double>() > m[0][0][0][0].item<double>());
        CHECK(m[0][1][0][1].item<double>() < m[0][0][0][1].item<double>());
        CHECK(trace.alpha.sum().item<double>() == doctest::Approx(1.0).epsilon(1e-6));
    }

    TEST_CASE("no SVM iterations means zero weights") {
        auto x = torch::randn({6, 3}, torch::kFloat64);
        auto y = torch::tensor({{1., 0.}, {0., 1.}, {1., 0.}, {0., 1.}, {1., 0.}, {0., 1.}}, torch::kFloat64);
        auto sol = metaoptnet_solve(x, y, 0.1, 0);
        CHECK(torch::all(sol.weights == 0).item<bool>());
        CHECK(torch::all(linear_head_logits(torch::randn({1, 3, 2, 2}), sol) == 0).item<bool>());
    }

    TEST_CASE("SVM dual stays in the box and never decreases") {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            const std::int64_t n = 8 + trial;
            auto x = torch::randn({n, 6}, torch::kFloat64);
            auto y = random_labels(n, rng);
            const double c = trial % 2 ? 0.1 : 5.0;
            SvmTrace trace;
            metaoptnet_solve(x, y, c, 30, &trace);
            REQUIRE(trace.objective.size() == 31);
            for (std::size_t i = 1; i < trace.objective.size(); ++i) {
                CHECK(trace.objective[i] >= trace.objective[i - 1] - 1e-12);
            }
            CHECK(trace.alpha.min().item<double>() >= 0.0);
            CHECK(trace.alpha.max().item<double>() <= c);
        }
    }

    TEST_CASE("single-class support is a missing-class error") {
        auto x = torch::randn({3, 2}, torch::kFloat64);
        auto y = torch::tensor({{0., 1.}, {0., 1.}, {0., 1.}}, torch::kFloat64);
        CHECK_THROWS_AS(metaoptnet_solve(x, y, 1.0, 5), MissingClassError);
    }

    TEST_CASE("labeled rows drop unknown pixels and respect the cap") {
        auto emb = torch::arange(2 * 3 * 4 * 4, torch::kFloat32).view({2, 3, 4, 4});
        auto codes = torch::full({2, 4, 4}, 2, torch::kUInt8);
        codes[0][1][2] = 1;
        codes[1][3][0] = 0;
        auto [x, y] = labeled_rows(emb, codes, 0, 1);
        REQUIRE(x.size(0) == 2);
        CHECK(x[0][0].item<double>() == emb[0][0][1][2].item<float>());
        CHECK(y[0][1].item<double>() == 1.0);
        CHECK(y[1][0].item<double>() == 1.0);
        auto all = torch::zeros({2, 4, 4}, torch::kUInt8);
        auto [xc, yc] = labeled_rows(emb, all, 5, 7);
        CHECK(xc.size(0) == 5);
        CHECK(torch::equal(xc, labeled_rows(emb, all, 5, 7).first));
    }

    TEST_CASE("guided network deployment is a pure function") {
        auto learner = make_learner(fusion_cfg("guidednet"));
        auto ep = fwseg::test::easy_episode(1, 16, 2, 2);
        const ParamSet before = learner->params().clone();
        CHECK(torch::equal(learner->deploy_scores(ep), learner->deploy_scores(ep)));
        CHECK(bitwise_equal(learner->params(), before));
    }

    TEST_CASE("guided network training lowers the query loss") {
        auto c = fusion_cfg("guidednet");
        c.outer.lr = 1e-2;
        c.outer_set = true;
        auto learner = make_learner(c);
        std::vector<Episode> batch;
        for (std::uint64_t s = 0; s < 4; ++s) batch.push_back(fwseg::test::easy_episode(20 + s, 16, 1, 2));
        const double first = learner->meta_step(batch);
        double last = first;
        for (int i = 1; i < 50; ++i) last = learner->meta_step(batch);
        CHECK(last < 0.8 * first);
    }

    TEST_CASE("linear-head deployment is deterministic and phi gets gradient through the solve") {
        for (const std::string m : {"r2d2", "metaoptnet"}) {
            auto learner = make_learner(fusion_cfg(m));
            auto ep = fwseg::test::easy_episode(2, 16, 1, 2,
                                                SparsityParams{.style = AnnotationStyle::Points, .n_pix = 5, .radius = 1});
            CHECK(torch::equal(learner->deploy_scores(ep), learner->deploy_scores(ep)));

            const auto t = episode_tensors(ep);
            ParamSet leaves = learner->params().leaves();
            auto f = learner->model().embed(leaves, torch::cat({t.support_images, t.query_images}));
            auto [x, y] = labeled_rows(f.narrow(0, 0, 1), t.support_codes, 2048, 1);
            auto sol = m == "r2d2" ? r2d2_solve(x, y, 1.0) : metaoptnet_solve(x, y, 0.1, 15);
            auto logits = linear_head_logits(f.narrow(0, 1, 2), sol);
            auto g = torch::autograd::grad({logits.pow(2).sum()}, {leaves.at("phi.stem.w")})[0];
            CHECK(g.norm().item<double>() > 0.0);
        }
    }

    TEST_CASE("deployed R2D2 beats a briefly trained from-scratch model on an easy task") {
        const SparsityParams pts{.style = AnnotationStyle::Points, .n_pix = 5, .radius = 2};
        auto c = fusion_cfg("r2d2");
        auto r2d2 = make_learner(c);
        for (int step = 0; step < 30; ++step) {
            std::vector<Episode> batch;
            for (int i = 0; i < 2; ++i) batch.push_back(fwseg::test::easy_episode(1000 + step * 2 + i, 24, 1, 2, pts));
            r2d2->meta_step(batch);
        }
        auto b = fusion_cfg("baseline");
        b.baseline_steps = 20;
        auto baseline = make_learner(b);
        double r = 0.0;
        double s = 0.0;
        for (std::uint64_t e = 0; e < 5; ++e) {
            auto ep = fwseg::test::easy_episode(50 + e, 24, 1, 3, pts);
            const auto pr = r2d2->deploy(ep);
            const auto pb = baseline->deploy(ep);
            for (std::size_t q = 0; q < ep.query.size(); ++q) {
                r += iou(pr[q], ep.query[q].mask).mean_iou;
                s += iou(pb[q], ep.query[q].mask).mean_iou;
            }
        }
        CHECK(r > s);
    }
}
