#include "fwseg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

#include "fwseg/random.hpp"

namespace fwseg {

namespace {

constexpr int kMinSide = 8;

cv::Mat to_u8(const Image& image) {
    cv::Mat m(image.height(), image.width(), CV_8UC1);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < image.width(); ++x) {
            row[x] = static_cast<std::uint8_t>(std::lround(std::clamp(image(y, x), 0.0f, 1.0f) * 255.0f));
        }
    }
    return m;
}

Image from_u8(const cv::Mat& m) {
    Image out(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) out(y, x) = static_cast<float>(row[x]) / 255.0f;
    }
    return out;
}

void require_min_size(const Image& image) {
    if (image.height() < kMinSide || image.width() < kMinSide) {
        throw DataError("image must be at least 8x8, got " + std::to_string(image.height()) + "x" +
                        std::to_string(image.width()));
    }
}

}  // namespace

AugmentParams draw_augment(std::uint64_t seed, const PreprocessConfig& cfg) {
    Rng rng = make_rng(seed);
    AugmentParams a;
    a.quarter_turns = std::uniform_int_distribution<int>(0, 3)(rng);
    a.flip_horizontal = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    a.flip_vertical = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    const int slack = std::max(0, cfg.resize_to - cfg.crop_to);
    a.crop_y = std::uniform_int_distribution<int>(0, slack)(rng);
    a.crop_x = std::uniform_int_distribution<int>(0, slack)(rng);
    return a;
}

Image clahe(const Image& image, int tiles, double clip_limit) {
    cv::Mat src = to_u8(image);
    cv::Mat dst;
    auto op = cv::createCLAHE(clip_limit, cv::Size(tiles, tiles));
    op->apply(src, dst);
    return from_u8(dst);
}

Image resize_bilinear(const Image& image, int height, int width) {
    if (image.height() == height && image.width() == width) return image;
    cv::Mat src(image.height(), image.width(), CV_32FC1, const_cast<float*>(image.cells().data()));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    Image out(height, width);
    for (int y = 0; y < height; ++y) {
        const auto* row = dst.ptr<float>(y);
        for (int x = 0; x < width; ++x) out(y, x) = std::clamp(row[x], 0.0f, 1.0f);
    }
    return out;
}

BinaryGrid resize_nearest(const BinaryGrid& mask, int height, int width) {
    if (mask.height() == height && mask.width() == width) return mask;
    cv::Mat src(mask.height(), mask.width(), CV_8UC1, const_cast<std::uint8_t*>(mask.cells().data()));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_NEAREST);
    BinaryGrid out(height, width);
    for (int y = 0; y < height; ++y) {
        const auto* row = dst.ptr<std::uint8_t>(y);
        for (int x = 0; x < width; ++x) out(y, x) = row[x] ? 1 : 0;
    }
    return out;
}

std::pair<Image, DenseMask> preprocess_train(const Image& image, const DenseMask& mask, const AugmentParams& aug,
                                             const PreprocessConfig& cfg) {
    require_min_size(image);
    require_same_shape(image, mask, "preprocess_train");
    Image img = clahe(image, cfg.clahe_tiles, cfg.clahe_clip);
    DenseMask m = mask;
    img = flip(rotate_quarter(img, aug.quarter_turns), aug.flip_horizontal, aug.flip_vertical);
    m = flip(rotate_quarter(m, aug.quarter_turns), aug.flip_horizontal, aug.flip_vertical);
    img = resize_bilinear(img, cfg.resize_to, cfg.resize_to);
    m = resize_nearest(m, cfg.resize_to, cfg.resize_to);
    const int cy = std::min(aug.crop_y, cfg.resize_to - cfg.crop_to);
    const int cx = std::min(aug.crop_x, cfg.resize_to - cfg.crop_to);
    return {crop(img, cy, cx, cfg.crop_to, cfg.crop_to), crop(m, cy, cx, cfg.crop_to, cfg.crop_to)};
}

std::pair<Image, DenseMask> preprocess_train(const Image& image, const DenseMask& mask, std::uint64_t seed,
                                             const PreprocessConfig& cfg) {
    return preprocess_train(image, mask, draw_augment(seed, cfg), cfg);
}

Image preprocess_deploy(const Image& image, const PreprocessConfig& cfg) {
    require_min_size(image);
    return resize_bilinear(clahe(image, cfg.clahe_tiles, cfg.clahe_clip), cfg.deploy_size, cfg.deploy_size);
}

DenseMask preprocess_deploy_mask(const DenseMask& mask, const PreprocessConfig& cfg) {
    return resize_nearest(mask, cfg.deploy_size, cfg.deploy_size);
}

Image quantize_8bit(const Image& image) {
    Image out = image;
    for (auto& v : out.cells()) v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
    return out;
}

}  // namespace fwseg
