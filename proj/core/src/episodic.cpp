#include "fwseg/episodic.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "fwseg/random.hpp"

namespace fwseg {

std::vector<std::size_t> MetaDataset::training_tasks() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!is_holdout(tasks[i])) out.push_back(i);
    }
    return out;
}

const SegTask& MetaDataset::find_task(const std::string& name) const {
    for (const auto& t : tasks) {
        if (t.id() == name) return t;
    }
    for (const auto& t : tasks) {
        if (t.dataset_id == name) return t;
    }
    throw ConfigError("no task named '" + name + "' in the meta-dataset");
}

Episode make_episode(const SegTask& task, const std::vector<std::size_t>& support_indices,
                     const std::vector<std::size_t>& query_indices, const SparsityParams& sparsity, Phase phase,
                     std::uint64_t seed, const PreprocessConfig& preprocess) {
    Episode ep;
    ep.task_id = task.id();
    ep.seed = seed;
    ep.sparsity = sparsity;
    if (phase == Phase::Train) ep.augment = draw_augment(derive_seed(seed, "augment"), preprocess);

    auto prepare = [&](const Sample& s) -> std::pair<Image, DenseMask> {
        if (phase == Phase::Train) return preprocess_train(s.image, s.mask, ep.augment, preprocess);
        return {preprocess_deploy(s.image, preprocess), preprocess_deploy_mask(s.mask, preprocess)};
    };

    for (auto idx : support_indices) {
        auto [img, mask] = prepare(task.samples.at(idx));
        SparsityParams p = sparsity;
        p.seed = derive_seed(sparsity.seed, idx);
        ep.support.push_back({std::move(img), sparsify(mask, p), idx});
    }
    for (auto idx : query_indices) {
        auto [img, mask] = prepare(task.samples.at(idx));
        ep.query.push_back({std::move(img), std::move(mask), idx});
    }
    return ep;
}

Episode sample_episode(const MetaDataset& meta, int shots, AnnotationStyle style, Phase phase, std::uint64_t seed,
                       const EpisodeOptions& options) {
    if (shots < 1) throw ParameterError("shots must be >= 1");
    std::vector<std::size_t> eligible;
    for (auto i : meta.training_tasks()) {
        if (meta.tasks[i].samples.size() >= static_cast<std::size_t>(shots) + 1) eligible.push_back(i);
    }
    if (eligible.empty()) {
        throw EpisodeSamplingError("no meta-training task has at least " + std::to_string(shots + 1) + " samples");
    }
    const int query_size = options.query_size > 0 ? options.query_size : shots;

    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        const std::uint64_t attempt_seed = derive_seed(seed, static_cast<std::uint64_t>(attempt));
        Rng rng = make_rng(attempt_seed);
        const auto& task = meta.tasks[eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)]];

        std::vector<std::size_t> order(task.samples.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        const std::vector<std::size_t> support(order.begin(), order.begin() + shots);
        const auto q_end = std::min(order.size(), static_cast<std::size_t>(shots + query_size));
        const std::vector<std::size_t> query(order.begin() + shots, order.begin() + static_cast<std::ptrdiff_t>(q_end));

        SparsityParams sparsity;
        if (options.sparsity) {
            sparsity = *options.sparsity;
            sparsity.seed = derive_seed(attempt_seed, "sparsify");
        } else {
            sparsity = sample_sparsity_params(style, phase, derive_seed(attempt_seed, "sparsity"));
        }
        try {
            return make_episode(task, support, query, sparsity, phase, attempt_seed, options.preprocess);
        } catch (const InfeasibleSparsity&) {
            continue;
        }
    }
    throw EpisodeSamplingError("could not sample a feasible episode in " + std::to_string(options.max_attempts) +
                               " attempts");
}

bool is_disjoint(const Episode& episode) {
    for (const auto& s : episode.support) {
        for (const auto& q : episode.query) {
            if (s.sample_index == q.sample_index) return false;
        }
    }
    return true;
}

}  // namespace fwseg
