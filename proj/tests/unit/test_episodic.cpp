#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "fwseg/dataset_io.hpp"
#include "fwseg/episodic.hpp"
#include "fwseg/log.hpp"
#include "fwseg/morphology.hpp"
#include "fwseg/preprocess.hpp"
#include "fwseg/random.hpp"
#include "fwseg/synth.hpp"
#include "fwseg/tensors.hpp"
#include "support/fixtures.hpp"

using namespace fwseg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("fwseg_test_episodic_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

SynthSpec small_spec() {
    SynthSpec s;
    s.families = {"ellipses", "rectangles", "rings"};
    s.regimes = {"contrast", "grain"};
    s.samples_per_task = 8;
    s.image_size = 32;
    return s;
}

PreprocessConfig small_pre() { return {.resize_to = 36, .crop_to = 32, .deploy_size = 32}; }

Image gradient_image(int h, int w) {
    Image img(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img(y, x) = static_cast<float>((y * w + x) % 97) / 96.0f;
    return img;
}

}  // namespace

TEST_SUITE("episodic_data") {
    TEST_CASE("zero augmentation with a top-left crop keeps the top-left window") {
        const Image img = gradient_image(140, 140);
        const DenseMask mask = fwseg::test::filled_rect(140, 140, 10, 20, 50, 60);
        const auto [out, m] = preprocess_train(img, mask, AugmentParams{}, PreprocessConfig{});
        CHECK(out.height() == 128);
        CHECK(out.width() == 128);
        const Image eq = clahe(img);
        for (int y = 0; y < 128; y += 7)
            for (int x = 0; x < 128; x += 5) CHECK(out(y, x) == doctest::Approx(eq(y, x)).epsilon(1e-6));
        CHECK(m == crop(mask, 0, 0, 128, 128));
    }

    TEST_CASE("resized masks stay binary") {
        const DenseMask mask = fwseg::test::filled_disk(50, 20, 24, 13);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto [img, m] = preprocess_train(gradient_image(50, 50), mask, seed);
            for (auto v : m.cells()) CHECK((v == 0 || v == 1));
        }
    }

    TEST_CASE("one seed gives every sample the same transform") {
        const PreprocessConfig cfg{};
        for (std::uint64_t seed = 0; seed < 16; ++seed) {
            const auto a = draw_augment(seed, cfg);
            CHECK(a == draw_augment(seed, cfg));
            CHECK(a.crop_y <= cfg.resize_to - cfg.crop_to);
            const DenseMask m1 = fwseg::test::filled_rect(60, 60, 5, 5, 20, 30);
            const DenseMask m2 = fwseg::test::filled_disk(60, 30, 30, 12);
            const Image i1 = gradient_image(60, 60);
            CHECK(preprocess_train(i1, m1, seed).second == preprocess_train(i1, m1, a).second);
            CHECK(preprocess_train(i1, m2, seed).second == preprocess_train(i1, m2, a).second);
        }
    }

    TEST_CASE("images below 8x8 are rejected") {
        CHECK_THROWS_AS(preprocess_train(Image(6, 6, 0.5f), DenseMask(6, 6, 0), 1), DataError);
    }

    TEST_CASE("deployment preprocessing") {
        const Image flat(64, 64, 0.4f);
        const Image out = preprocess_deploy(flat);
        CHECK(out.height() == 128);
        CHECK(out.width() == 128);
        for (auto v : out.cells()) CHECK(v == doctest::Approx(out[0]).epsilon(1e-6));

        const Image big = preprocess_deploy(gradient_image(256, 256));
        CHECK(big.height() == 128);
        CHECK(preprocess_deploy(big).height() == 128);
        CHECK(preprocess_deploy(gradient_image(256, 256)) == big);
    }

    TEST_CASE("quarter turns compose to the identity") {
        const auto g = fwseg::test::parse_grid({"##.", "...", "..#", "#.."});
        CHECK(rotate_quarter(rotate_quarter(g, 1), 3) == g);
        CHECK(rotate_quarter(g, 1).height() == 3);
        CHECK(flip(flip(g, true, true), true, true) == g);
    }

    TEST_CASE("synthetic masks respect the area range") {
        int checked = 0;
        std::uint64_t seed = 0;
        for (const auto& family : synth_families()) {
            for (int i = 0; i < 250; ++i, ++seed) {
                const auto& regime = synth_regimes()[seed % synth_regimes().size()];
                const Sample s = synth_sample(family, regime, 32, 0.05, 0.40, 0.04, seed);
                const double frac = static_cast<double>(count_ones(s.mask)) / s.mask.size();
                CHECK(count_ones(s.mask) > 0);
                CHECK(frac >= 0.05);
                CHECK(frac <= 0.40);
                ++checked;
            }
        }
        CHECK(checked == 1000);
    }

    TEST_CASE("synthetic datasets are reproducible and exclude the holdout from training") {
        const auto spec = small_spec();
        const auto a = synth_meta_dataset(spec);
        const auto b = synth_meta_dataset(spec);
        REQUIRE(a.tasks.size() == 6);
        for (std::size_t t = 0; t < a.tasks.size(); ++t) {
            for (std::size_t i = 0; i < a.tasks[t].samples.size(); ++i) {
                CHECK(a.tasks[t].samples[i].image == b.tasks[t].samples[i].image);
                CHECK(a.tasks[t].samples[i].mask == b.tasks[t].samples[i].mask);
            }
        }
        for (auto i : a.training_tasks()) CHECK(a.tasks[i].dataset_id != "rings");
        CHECK(a.training_tasks().size() == 4);
        CHECK(a.find_task("rings/grain").target_class == "grain");
        CHECK(a.find_task("ellipses").dataset_id == "ellipses");
        CHECK_THROWS_AS(a.find_task("circles"), ConfigError);
    }

    TEST_CASE("synthetic spec validation") {
        auto bad = small_spec();
        bad.families = {"ellipses"};
        bad.holdout = "ellipses";
        CHECK_THROWS_AS(synth_meta_dataset(bad), ConfigError);
        bad = small_spec();
        bad.families.push_back("hexagons");
        CHECK_THROWS_AS(validate(bad), ConfigError);
        bad = small_spec();
        bad.holdout = "blobs";
        CHECK_THROWS_AS(validate(bad), ConfigError);
        bad = small_spec();
        bad.min_area = 0.5;
        bad.max_area = 0.3;
        CHECK_THROWS_AS(validate(bad), ConfigError);
    }

    TEST_CASE("one-shot episodes keep support and query apart") {
        const auto meta = synth_meta_dataset(small_spec());
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto ep = sample_episode(meta, 1, AnnotationStyle::Points, Phase::Train, seed,
                                           {.query_size = 3, .preprocess = small_pre()});
            CHECK(ep.shots() == 1);
            CHECK(ep.query.size() == 3);
            CHECK(is_disjoint(ep));
            CHECK(meta.find_task(ep.task_id).dataset_id != "rings");
        }
    }

    TEST_CASE("episodes are reproducible from their seed") {
        const auto meta = synth_meta_dataset(small_spec());
        for (auto style : {AnnotationStyle::Points, AnnotationStyle::Scribbles, AnnotationStyle::Skeleton}) {
            const auto a = sample_episode(meta, 2, style, Phase::Train, 77, {.preprocess = small_pre()});
            const auto b = sample_episode(meta, 2, style, Phase::Train, 77, {.preprocess = small_pre()});
            CHECK(a.task_id == b.task_id);
            CHECK(a.augment == b.augment);
            CHECK(a.sparsity == b.sparsity);
            for (std::size_t i = 0; i < a.support.size(); ++i) {
                CHECK(a.support[i].weak == b.support[i].weak);
                CHECK(a.support[i].image == b.support[i].image);
            }
        }
    }

    TEST_CASE("support masks of a training episode share one augmentation and pass integrity") {
        const auto meta = synth_meta_dataset(small_spec());
        const auto ep = sample_episode(meta, 3, AnnotationStyle::Grid, Phase::Train, 5, {.preprocess = small_pre()});
        const auto& task = meta.find_task(ep.task_id);
        for (const auto& s : ep.support) {
            const auto [img, dense] = preprocess_train(task.samples[s.sample_index].image,
                                                       task.samples[s.sample_index].mask, ep.augment, small_pre());
            CHECK(img == s.image);
            CHECK(integrity_violations(dense, s.weak) == 0);
        }
    }

    TEST_CASE("test-phase points with n_pix 5 draw exactly 5 seeds per class") {
        const auto meta = synth_meta_dataset(small_spec());
        const auto& task = meta.find_task("rings/contrast");
        const SparsityParams p{.style = AnnotationStyle::Points, .n_pix = 5, .radius = 3, .seed = 1234};
        const auto ep = make_episode(task, {0, 3, 5}, {1, 2}, p, Phase::Test, 9, small_pre());
        for (const auto& s : ep.support) {
            const auto dense = preprocess_deploy_mask(task.samples[s.sample_index].mask, small_pre());
            SparsityParams seeds = p;
            seeds.radius = 0;
            seeds.seed = derive_seed(p.seed, s.sample_index);
            const auto raw = sparsify(dense, seeds);
            for (Label l : {Label::Positive, Label::Negative}) {
                const auto pts = fwseg::test::labeled_as(raw, l);
                const auto grown = fwseg::test::labeled_as(s.weak, l);
                CHECK(count_ones(pts) == 5);
                CHECK(is_subset(pts, grown));
                CHECK(is_subset(grown, dilate(pts, 3)));
            }
        }
    }

    TEST_CASE("infeasible sparsity exhausts the retry budget") {
        MetaDataset meta;
        SegTask t{"flat", "all", {}};
        for (int i = 0; i < 4; ++i) t.samples.push_back({Image(16, 16, 0.5f), DenseMask(16, 16, 1)});
        meta.tasks.push_back(t);
        CHECK_THROWS_AS(sample_episode(meta, 1, AnnotationStyle::Points, Phase::Train, 1,
                                       {.preprocess = {.resize_to = 16, .crop_to = 16, .deploy_size = 16}}),
                        EpisodeSamplingError);
    }

    TEST_CASE("sampling needs a task with more than k samples") {
        MetaDataset meta;
        SegTask t{"tiny", "c", {}};
        t.samples.push_back({Image(16, 16, 0.5f), fwseg::test::filled_rect(16, 16, 4, 4, 6, 6)});
        meta.tasks.push_back(t);
        CHECK_THROWS_AS(sample_episode(meta, 1, AnnotationStyle::Points, Phase::Train, 1), EpisodeSamplingError);
    }

    TEST_CASE("dataset directories round-trip") {
        const auto root = scratch_dir("roundtrip");
        const auto meta = synth_meta_dataset(small_spec());
        std::vector<SegTask> tasks(meta.tasks.begin(), meta.tasks.begin() + 2);
        write_dataset_dir(root, tasks);
        const auto loaded = load_dataset_dir(root);
        REQUIRE(loaded.size() == 2);
        for (std::size_t t = 0; t < 2; ++t) {
            const auto& want = tasks[t];
            const auto it = std::find_if(loaded.begin(), loaded.end(), [&](const SegTask& s) { return s.id() == want.id(); });
            REQUIRE(it != loaded.end());
            REQUIRE(it->samples.size() == want.samples.size());
            for (std::size_t i = 0; i < want.samples.size(); ++i) {
                CHECK(it->samples[i].mask == want.samples[i].mask);
                CHECK(it->samples[i].image == quantize_8bit(want.samples[i].image));
            }
        }
    }

    TEST_CASE("one image with its mask is one sample") {
        const auto root = scratch_dir("single");
        fs::create_directories(root / "ds" / "cls");
        write_image_png(root / "ds" / "cls" / "img001.png", gradient_image(12, 12));
        write_mask_png(root / "ds" / "cls" / "img001_mask.png", fwseg::test::filled_rect(12, 12, 2, 2, 5, 5));
        const auto tasks = load_dataset_dir(root);
        REQUIRE(tasks.size() == 1);
        CHECK(tasks[0].id() == "ds/cls");
        CHECK(tasks[0].samples.size() == 1);
    }

    TEST_CASE("non-binary masks and missing masks are data errors") {
        const auto root = scratch_dir("bad");
        const auto dir = root / "ds" / "cls";
        fs::create_directories(dir);
        cv::Mat m(8, 8, CV_8UC1, cv::Scalar(0));
        m.at<std::uint8_t>(3, 3) = 7;
        cv::imwrite((dir / "img001_mask.png").string(), m);
        write_image_png(dir / "img001.png", gradient_image(8, 8));
        CHECK_THROWS_AS(read_mask_png(dir / "img001_mask.png"), DataError);
        CHECK_THROWS_AS(load_dataset_dir(root), DataError);

        fs::remove(dir / "img001_mask.png");
        CHECK_THROWS_AS(load_dataset_dir(root), DataError);
    }

    TEST_CASE("an empty dataset directory yields no tasks and a warning") {
        const auto root = scratch_dir("empty");
        std::vector<std::string> warnings;
        ScopedWarningSink sink([&](const std::string& m) { warnings.push_back(m); });
        CHECK(load_dataset_dir(root).empty());
        CHECK(warnings.size() == 1);
    }

    TEST_CASE("weak masks survive the PNG encoding") {
        const auto root = scratch_dir("weak");
        WeakMask w(5, 7, Label::Unknown);
        w(1, 1) = Label::Positive;
        w(4, 6) = Label::Negative;
        write_weak_png(root / "w.png", w);
        CHECK(read_weak_png(root / "w.png") == w);
    }

    TEST_CASE("episode tensors carry codes 0, 1 and 2") {
        const auto meta = synth_meta_dataset(small_spec());
        const auto ep = sample_episode(meta, 2, AnnotationStyle::Points, Phase::Train, 3, {.preprocess = small_pre()});
        const auto codes = support_labels(ep);
        CHECK(codes.sizes() == torch::IntArrayRef({2, 32, 32}));
        CHECK(codes.max().item<int>() == kUnknownCode);
        CHECK(support_images(ep).sizes() == torch::IntArrayRef({2, 1, 32, 32}));
        const auto masks = tensor_to_masks(query_labels(ep));
        CHECK(masks[0] == ep.query[0].mask);
    }
}
