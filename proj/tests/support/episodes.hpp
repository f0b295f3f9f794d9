#pragma once

#include <random>

#include "fwseg/episodic.hpp"
#include "support/fixtures.hpp"

namespace fwseg::test {

/// Bright rectangle on a dark noisy background; trivially separable by intensity.
inline Sample easy_sample(std::mt19937_64& rng, int size) {
    std::uniform_int_distribution<int> pos(1, size / 2 - 1);
    std::uniform_int_distribution<int> ext(size / 4, size / 2);
    std::normal_distribution<float> noise(0.0f, 0.03f);
    DenseMask m = filled_rect(size, size, pos(rng), pos(rng), ext(rng), ext(rng));
    Image img(size, size);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = (m[i] ? 0.8f : 0.2f) + noise(rng);
    return {img, m};
}

/// Fully specified episode: weak support masks come from `sparsity`, or are dense when it is empty.
inline Episode easy_episode(std::uint64_t seed, int size = 24, int shots = 1, int queries = 2,
                            std::optional<SparsityParams> sparsity = std::nullopt) {
    std::mt19937_64 rng(seed);
    Episode ep;
    ep.seed = seed;
    ep.task_id = "easy/rect";
    for (int i = 0; i < shots; ++i) {
        auto s = easy_sample(rng, size);
        WeakMask w(size, size, Label::Unknown);
        if (sparsity) {
            SparsityParams p = *sparsity;
            p.seed = seed * 31 + static_cast<std::uint64_t>(i);
            w = sparsify(s.mask, p);
        } else {
            for (std::size_t j = 0; j < w.size(); ++j) w[j] = s.mask[j] ? Label::Positive : Label::Negative;
        }
        ep.support.push_back({s.image, w, static_cast<std::size_t>(i)});
    }
    for (int i = 0; i < queries; ++i) {
        auto s = easy_sample(rng, size);
        ep.query.push_back({s.image, s.mask, static_cast<std::size_t>(shots + i)});
    }
    return ep;
}

/// Query equal to the support images with their dense masks.
inline Episode self_episode(const Sample& s) {
    Episode ep;
    WeakMask w(s.mask.height(), s.mask.width(), Label::Unknown);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = s.mask[j] ? Label::Positive : Label::Negative;
    ep.support.push_back({s.image, w, 0});
    ep.query.push_back({s.image, s.mask, 1});
    ep.task_id = "self";
    return ep;
}

}  // namespace fwseg::test
