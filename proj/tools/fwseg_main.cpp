// fwseg command line: sparsify, synth-data, meta-train, evaluate, report.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fwseg/dataset_io.hpp"
#include "fwseg/harness.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

int exit_code_for(fwseg::ErrorKind kind) {
    switch (kind) {
        case fwseg::ErrorKind::Config: return kConfig;
        case fwseg::ErrorKind::Data: return kData;
        case fwseg::ErrorKind::Runtime: return kRuntime;
    }
    return kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot weakly-supervised segmentation via meta-learning"};
    app.require_subcommand(1);

    std::string dense_path, style = "points", params, out_path;
    std::uint64_t seed = 0;
    auto* sparsify = app.add_subcommand("sparsify", "Turn a dense mask PNG into a weak mask PNG");
    sparsify->add_option("dense", dense_path, "dense mask PNG ({0,255})")->required();
    sparsify->add_option("--style", style, "points, grid, scribbles or skeleton");
    sparsify->add_option("--params", params, "e.g. \"n_pix=5;radius=2\"")->required();
    sparsify->add_option("--seed", seed, "sparsification seed");
    sparsify->add_option("-o,--output", out_path, "weak mask PNG (0/255/128)")->required();

    std::string spec_path, data_out;
    auto* synth = app.add_subcommand("synth-data", "Render the synthetic meta-dataset to disk");
    synth->add_option("spec", spec_path, "synthetic data spec (JSON)")->required();
    synth->add_option("-o,--output", data_out, "output directory")->required();

    std::string config_path, checkpoint;
    std::vector<std::string> overrides;
    auto* train = app.add_subcommand("meta-train", "Episodic meta-training");
    train->add_option("config", config_path, "experiment config (JSON)")->required();
    train->add_option("--set", overrides, "override a config key (key=value)");

    auto* evaluate = app.add_subcommand("evaluate", "Paired k-fold evaluation on the target task");
    evaluate->add_option("config", config_path, "experiment config (JSON)")->required();
    evaluate->add_option("--checkpoint", checkpoint, "meta-trained checkpoint (ignored by the baseline)");
    evaluate->add_option("--set", overrides, "override a config key (key=value)");

    std::string results_path, report_dir;
    auto* report = app.add_subcommand("report", "Tables and plots from a results file");
    report->add_option("results", results_path, "results.csv")->required();
    report->add_option("-o,--output", report_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*sparsify) {
            auto sp = fwseg::SparsityParams::parse(fwseg::parse_style(style), params);
            sp.seed = seed;
            const auto dense = fwseg::read_mask_png(dense_path);
            fwseg::write_weak_png(out_path, fwseg::sparsify(dense, sp));
        } else if (*synth) {
            const auto spec = fwseg::load_synth_spec(spec_path);
            fwseg::write_dataset_dir(data_out, fwseg::synth_meta_dataset(spec).tasks);
        } else if (*train) {
            const auto cfg = fwseg::load_config(config_path, overrides);
            const auto summary = fwseg::run_meta_train(cfg);
            std::cout << "meta-trained " << summary.steps << " steps -> " << summary.checkpoint.string() << '\n';
        } else if (*evaluate) {
            const auto cfg = fwseg::load_config(config_path, overrides);
            std::optional<fwseg::fs::path> ckpt;
            if (!checkpoint.empty()) ckpt = checkpoint;
            const auto records = fwseg::run_eval(cfg, ckpt);
            const auto out = cfg.out_dir / "results.csv";
            fwseg::write_results_csv(out, records);
            std::cout << records.size() << " records -> " << out.string() << '\n';
        } else if (*report) {
            const auto files = fwseg::emit_report(fwseg::read_results_csv(results_path), report_dir);
            std::cout << "report -> " << files.markdown.string() << '\n';
        }
    } catch (const fwseg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const c10::Error& e) {
        std::cerr << "error: " << e.what_without_backtrace() << '\n';
        return kRuntime;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
