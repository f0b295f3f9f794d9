#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fwseg/episodic.hpp"
#include "fwseg/learner.hpp"
#include "fwseg/synth.hpp"

namespace fwseg {

namespace fs = std::filesystem;

/// Everything that determines a run. Loaded from a flat JSON object whose keys
/// are listed in the README; command-line `key=value` overrides win over the file.
struct ExperimentConfig {
    LearnerConfig learner{};
    int shots = 1;
    AnnotationStyle style = AnnotationStyle::Points;
    /// Evaluation sparsity points (default: the style's test grid).
    std::vector<SparsityParams> sparsity;

    int meta_steps = 2000;
    int meta_batch = 4;
    int query_size = 0;  // meta-training query batch (0 = shots)
    int checkpoint_every = 0;

    std::uint64_t seed = 1;       // master seed for initialization and episodes
    std::uint64_t test_seed = 7;  // target-support sparsification
    std::uint64_t fold_seed = 11; // fold partition
    int folds = 5;

    std::optional<fs::path> data_dir;  // dataset directory; synthetic data otherwise
    SynthSpec synth{};
    std::string target = "rings/contrast";  // "<dataset_id>/<class_tag>"
    std::vector<std::string> holdout;       // dataset ids excluded from meta-training

    PreprocessConfig preprocess{};
    fs::path out_dir = "fwseg_out";
    std::optional<fs::path> resume;
    bool dump_support_masks = true;
};

/// Parses a JSON config file (or an empty config when `path` is empty) and
/// applies `overrides` of the form "key=value". Unknown keys are errors.
ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides = {});
ExperimentConfig config_from_json_text(const std::string& text, const std::vector<std::string>& overrides = {});

/// Reads a synthetic-data spec (flat JSON with the SynthSpec field names).
SynthSpec load_synth_spec(const fs::path& path);

/// Meta-dataset of a config: the directory contents or the synthetic tasks,
/// with the configured holdout set applied.
MetaDataset load_meta_dataset(const ExperimentConfig& cfg);

/// Throws ConfigError when the target dataset could be drawn for meta-training.
void check_holdout(const ExperimentConfig& cfg, const MetaDataset& meta);

struct TrainSummary {
    fs::path checkpoint;
    std::int64_t steps = 0;
    std::vector<double> losses;  // losses of the steps run by this call
};

/// Episodic meta-training with per-episode random sparsity from the training
/// ranges. Writes `<out_dir>/checkpoint.ckpt` and appends to `loss_curve.csv`.
/// Episode i of step s uses derive_seed(derive_seed(seed, "episodes"), s * meta_batch + i),
/// so a resumed run continues exactly like an uninterrupted one.
TrainSummary run_meta_train(const ExperimentConfig& cfg);

struct ResultRecord {
    std::string method;
    std::string backbone;
    std::string style;
    std::string sparsity;  // SparsityParams::describe()
    int shots = 0;
    int fold = 0;
    double iou_pos = 0.0;
    double iou_neg = 0.0;
    double mean_iou = 0.0;
    double wall_time = 0.0;  // seconds, excluded from determinism checks

    /// Equality ignoring wall_time.
    bool same_result(const ResultRecord& o) const;
    friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

/// Support indices of each fold: a seeded permutation cut into disjoint chunks
/// of `shots`. Depends only on (fold_seed, sample count, shots, folds).
std::vector<std::vector<std::size_t>> fold_supports(std::uint64_t fold_seed, std::size_t samples, int shots,
                                                    int folds);

/// Paired k-fold evaluation of one method on the target task. The query of a
/// fold is every non-support sample. Support masks are sparsified from
/// test_seed alone, so every method sees the same weak masks. The baseline
/// ignores `checkpoint`.
std::vector<ResultRecord> run_eval(const ExperimentConfig& cfg, const std::optional<fs::path>& checkpoint);

void write_results_csv(const fs::path& path, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_results_csv(const fs::path& path);
std::string results_csv_text(const std::vector<ResultRecord>& records, bool include_wall_time = true);

struct ReportFiles {
    fs::path csv;
    fs::path markdown;
    std::vector<fs::path> plots;
};

/// results.csv, report.md (one mean +- std table per style) and one
/// sparsity-vs-IoU plot per style. Throws DataError for an empty record list.
ReportFiles emit_report(const std::vector<ResultRecord>& records, const fs::path& out_dir);

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

}  // namespace fwseg
