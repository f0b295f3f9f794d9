#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fwseg/grid.hpp"
#include "fwseg/preprocess.hpp"
#include "fwseg/weak_labels.hpp"

namespace fwseg {

struct Sample {
    Image image;
    DenseMask mask;
};

/// One binary segmentation task: a dataset and the class treated as positive.
struct SegTask {
    std::string dataset_id;
    std::string target_class;
    std::vector<Sample> samples;

    std::string id() const { return dataset_id + "/" + target_class; }
};

struct SupportItem {
    Image image;
    WeakMask weak;
    std::size_t sample_index = 0;
};

struct QueryItem {
    Image image;
    DenseMask mask;
    std::size_t sample_index = 0;
};

/// A sampled task instance. Support and query sample indices are disjoint and
/// every support mask has passed fix_integrity.
struct Episode {
    std::vector<SupportItem> support;
    std::vector<QueryItem> query;
    SparsityParams sparsity;
    AugmentParams augment;
    std::string task_id;
    std::uint64_t seed = 0;

    int shots() const { return static_cast<int>(support.size()); }
};

struct MetaDataset {
    std::vector<SegTask> tasks;
    std::set<std::string> holdout;  // dataset ids never used for meta-training

    bool is_holdout(const SegTask& t) const { return holdout.count(t.dataset_id) > 0; }
    /// Indices of tasks available for meta-training.
    std::vector<std::size_t> training_tasks() const;
    /// First task whose id() or dataset_id matches `name`.
    const SegTask& find_task(const std::string& name) const;
};

struct EpisodeOptions {
    int query_size = 0;  // 0: same as shots
    int max_attempts = 16;
    PreprocessConfig preprocess{};
    /// Overrides the phase-based sparsity draw (its seed is still re-derived per episode).
    std::optional<SparsityParams> sparsity;
};

/// Draws a meta-training episode from a non-holdout task. Infeasible sparsity
/// triggers a fresh draw, at most `max_attempts` times.
Episode sample_episode(const MetaDataset& meta, int shots, AnnotationStyle style, Phase phase, std::uint64_t seed,
                       const EpisodeOptions& options = {});

/// Builds an episode from explicit support/query indices of one task.
/// Train phase applies one shared augmentation; test phase uses deploy preprocessing.
/// Support mask j is sparsified with derive_seed(sparsity.seed, support_indices[j]).
Episode make_episode(const SegTask& task, const std::vector<std::size_t>& support_indices,
                     const std::vector<std::size_t>& query_indices, const SparsityParams& sparsity, Phase phase,
                     std::uint64_t seed, const PreprocessConfig& preprocess = {});

/// True when no sample index appears in both support and query.
bool is_disjoint(const Episode& episode);

}  // namespace fwseg
