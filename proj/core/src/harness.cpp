#include "fwseg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fwseg/dataset_io.hpp"
#include "fwseg/log.hpp"
#include "fwseg/losses.hpp"
#include "fwseg/random.hpp"

namespace fwseg {

using json = nlohmann::json;

namespace {

template <class T>
T get(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "' has the wrong type: " + e.what());
    }
}

void apply_synth_key(SynthSpec& s, const std::string& k, const json& v) {
    if (k == "families") s.families = get<std::vector<std::string>>(v, k);
    else if (k == "regimes") s.regimes = get<std::vector<std::string>>(v, k);
    else if (k == "holdout") s.holdout = get<std::string>(v, k);
    else if (k == "samples_per_task") s.samples_per_task = get<int>(v, k);
    else if (k == "image_size") s.image_size = get<int>(v, k);
    else if (k == "min_area") s.min_area = get<double>(v, k);
    else if (k == "max_area") s.max_area = get<double>(v, k);
    else if (k == "noise") s.noise = get<double>(v, k);
    else if (k == "seed") s.seed = get<std::uint64_t>(v, k);
    else throw ConfigError("unknown synthetic-data key '" + k + "'");
}

void apply_key(ExperimentConfig& c, const std::string& k, const json& v) {
    auto& l = c.learner;
    if (k.rfind("synth.", 0) == 0) return apply_synth_key(c.synth, k.substr(6), v);
    if (k == "method") l.method = get<std::string>(v, k);
    else if (k == "arch") l.model.arch = parse_arch(get<std::string>(v, k));
    else if (k == "width") l.model.width = get<int>(v, k);
    else if (k == "in_channels") l.model.in_channels = get<int>(v, k);
    else if (k == "seed") c.seed = get<std::uint64_t>(v, k);
    else if (k == "test_seed") c.test_seed = get<std::uint64_t>(v, k);
    else if (k == "fold_seed") c.fold_seed = get<std::uint64_t>(v, k);
    else if (k == "folds") c.folds = get<int>(v, k);
    else if (k == "shots") c.shots = get<int>(v, k);
    else if (k == "style") c.style = parse_style(get<std::string>(v, k));
    else if (k == "sparsity") {
        c.sparsity.clear();
        for (const auto& s : get<std::vector<std::string>>(v, k)) c.sparsity.push_back(SparsityParams::parse(c.style, s));
    }
    else if (k == "meta_steps") c.meta_steps = get<int>(v, k);
    else if (k == "meta_batch") c.meta_batch = get<int>(v, k);
    else if (k == "query_size") c.query_size = get<int>(v, k);
    else if (k == "checkpoint_every") c.checkpoint_every = get<int>(v, k);
    else if (k == "inner_steps") l.inner_steps = get<int>(v, k);
    else if (k == "inner_lr") l.inner_lr = get<double>(v, k);
    else if (k == "deploy_steps") l.deploy_steps = get<int>(v, k);
    else if (k == "reptile_epsilon") l.reptile_epsilon = get<double>(v, k);
    else if (k == "outer_optimizer") { l.outer.kind = get<std::string>(v, k); l.outer_set = true; }
    else if (k == "outer_lr") { l.outer.lr = get<double>(v, k); l.outer_set = true; }
    else if (k == "outer_momentum") { l.outer.momentum = get<double>(v, k); l.outer_set = true; }
    else if (k == "cosine_scale") l.cosine_scale = get<double>(v, k);
    else if (k == "lambda_par") l.lambda_par = get<double>(v, k);
    else if (k == "ridge_lambda") l.ridge_lambda = get<double>(v, k);
    else if (k == "svm_c") l.svm_c = get<double>(v, k);
    else if (k == "svm_iters") l.svm_iters = get<int>(v, k);
    else if (k == "row_cap") l.row_cap = get<int>(v, k);
    else if (k == "linear_scale_init") l.linear_scale_init = get<double>(v, k);
    else if (k == "baseline_steps") l.baseline_steps = get<int>(v, k);
    else if (k == "baseline_lr") l.baseline_lr = get<double>(v, k);
    else if (k == "data_dir") c.data_dir = fs::path(get<std::string>(v, k));
    else if (k == "target") c.target = get<std::string>(v, k);
    else if (k == "holdout") c.holdout = get<std::vector<std::string>>(v, k);
    else if (k == "out_dir") c.out_dir = get<std::string>(v, k);
    else if (k == "resume") c.resume = fs::path(get<std::string>(v, k));
    else if (k == "dump_support_masks") c.dump_support_masks = get<bool>(v, k);
    else if (k == "preprocess.resize_to") c.preprocess.resize_to = get<int>(v, k);
    else if (k == "preprocess.crop_to") c.preprocess.crop_to = get<int>(v, k);
    else if (k == "preprocess.deploy_size") c.preprocess.deploy_size = get<int>(v, k);
    else if (k == "preprocess.clahe_tiles") c.preprocess.clahe_tiles = get<int>(v, k);
    else if (k == "preprocess.clahe_clip") c.preprocess.clahe_clip = get<double>(v, k);
    else throw ConfigError("unknown config key '" + k + "'");
}

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + origin + ": " + e.what());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void finalize(ExperimentConfig& c) {
    // "style" may follow "sparsity" in the file; re-tag the parsed points.
    for (auto& s : c.sparsity) {
        if (s.style != c.style) throw ConfigError("sparsity points do not match the configured style");
    }
    if (c.sparsity.empty()) c.sparsity = test_sparsity_grid(c.style);
    for (const auto& s : c.sparsity) validate(s);
    if (c.shots < 1) throw ConfigError("shots must be >= 1");
    if (c.meta_steps < 0) throw ConfigError("meta_steps must be >= 0");
    if (c.meta_batch < 1) throw ConfigError("meta_batch must be >= 1");
    if (c.folds < 1) throw ConfigError("folds must be >= 1");
    if (c.target.find('/') == std::string::npos) throw ConfigError("target must be '<dataset_id>/<class_tag>'");
    if (c.holdout.empty() && !c.data_dir && !c.synth.holdout.empty()) c.holdout = {c.synth.holdout};
    if (c.preprocess.crop_to > c.preprocess.resize_to) throw ConfigError("crop_to must not exceed resize_to");
    if (c.preprocess.crop_to < 8 || c.preprocess.deploy_size < 8) throw ConfigError("image sizes must be >= 8");
    c.learner.seed = c.seed;
    c.learner = resolve_defaults(c.learner);
}

std::string sanitize(std::string s) {
    for (auto& ch : s) {
        if (ch == ';' || ch == '=' || ch == ',') ch = '_';
    }
    return s;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

const char* kCsvHeader = "method,backbone,style,sparsity,shots,fold,iou_pos,iou_neg,mean_iou,wall_time";

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text, const std::vector<std::string>& overrides) {
    ExperimentConfig c;
    json j = text.empty() ? json::object() : parse_json(text, "config");
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + o);
        const std::string key = o.substr(0, eq);
        const std::string raw = o.substr(eq + 1);
        json v = json::parse(raw, nullptr, false);
        j[key] = v.is_discarded() ? json(raw) : v;
    }
    // Style first so sparsity strings are parsed for the right style.
    if (j.contains("style")) apply_key(c, "style", j["style"]);
    for (const auto& [k, v] : j.items()) {
        if (k != "style") apply_key(c, k, v);
    }
    finalize(c);
    return c;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    return config_from_json_text(path.empty() ? std::string() : read_text(path), overrides);
}

SynthSpec load_synth_spec(const fs::path& path) {
    json j = parse_json(read_text(path), path.string());
    if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
    SynthSpec s;
    for (const auto& [k, v] : j.items()) apply_synth_key(s, k, v);
    validate(s);
    return s;
}

MetaDataset load_meta_dataset(const ExperimentConfig& cfg) {
    MetaDataset meta;
    if (cfg.data_dir) {
        meta.tasks = load_dataset_dir(*cfg.data_dir);
    } else {
        meta = synth_meta_dataset(cfg.synth);
    }
    meta.holdout.insert(cfg.holdout.begin(), cfg.holdout.end());
    return meta;
}

void check_holdout(const ExperimentConfig& cfg, const MetaDataset& meta) {
    const std::string dataset = cfg.target.substr(0, cfg.target.find('/'));
    if (!meta.holdout.count(dataset)) {
        throw ConfigError("target dataset '" + dataset + "' is not held out from meta-training");
    }
    bool found = false;
    for (const auto& t : meta.tasks) found = found || t.id() == cfg.target;
    if (!found) throw ConfigError("target task '" + cfg.target + "' is not in the dataset");
    if (meta.training_tasks().empty()) throw ConfigError("no meta-training task remains after the holdout");
}

TrainSummary run_meta_train(const ExperimentConfig& cfg) {
    auto learner = make_learner(cfg.learner);
    if (!learner->meta_trainable()) throw ConfigError("method '" + cfg.learner.method + "' is not meta-trained");
    const MetaDataset meta = load_meta_dataset(cfg);
    check_holdout(cfg, meta);

    fs::create_directories(cfg.out_dir);
    if (cfg.resume) learner->load(load_checkpoint(*cfg.resume));
    const auto ckpt_path = cfg.out_dir / "checkpoint.ckpt";
    const auto curve_path = cfg.out_dir / "loss_curve.csv";
    const bool fresh = !cfg.resume;
    std::ofstream curve(curve_path, fresh ? std::ios::trunc : std::ios::app);
    if (fresh) curve << "step,loss\n";

    EpisodeOptions opts;
    opts.query_size = cfg.query_size;
    opts.preprocess = cfg.preprocess;
    const std::uint64_t episode_root = derive_seed(cfg.seed, "episodes");

    TrainSummary summary;
    for (std::int64_t step = learner->meta_steps_done(); step < cfg.meta_steps; ++step) {
        std::vector<Episode> batch;
        for (int i = 0; i < cfg.meta_batch; ++i) {
            const auto index = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(cfg.meta_batch) + i;
            batch.push_back(sample_episode(meta, cfg.shots, cfg.style, Phase::Train, derive_seed(episode_root, index),
                                           opts));
        }
        const double loss = learner->meta_step(batch);
        if (!std::isfinite(loss)) throw TrainingError("meta-training diverged at step " + std::to_string(step));
        summary.losses.push_back(loss);
        char line[64];
        std::snprintf(line, sizeof line, "%lld,%.9g\n", static_cast<long long>(step), loss);
        curve << line;
        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
            save_checkpoint(ckpt_path, learner->to_checkpoint());
        }
    }
    save_checkpoint(ckpt_path, learner->to_checkpoint());
    summary.checkpoint = ckpt_path;
    summary.steps = learner->meta_steps_done();
    return summary;
}

bool ResultRecord::same_result(const ResultRecord& o) const {
    ResultRecord a = *this;
    ResultRecord b = o;
    a.wall_time = b.wall_time = 0.0;
    return a == b;
}

std::vector<std::vector<std::size_t>> fold_supports(std::uint64_t fold_seed, std::size_t samples, int shots,
                                                    int folds) {
    if (samples < static_cast<std::size_t>(shots) * static_cast<std::size_t>(folds) || samples <= static_cast<std::size_t>(shots)) {
        throw DataError("target task has " + std::to_string(samples) + " samples; " + std::to_string(folds) +
                        " folds of " + std::to_string(shots) + " shots need at least " +
                        std::to_string(std::max(shots * folds, shots + 1)));
    }
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(derive_seed(fold_seed, "folds"));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> s(order.begin() + f * shots, order.begin() + (f + 1) * shots);
        std::sort(s.begin(), s.end());
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ResultRecord> run_eval(const ExperimentConfig& cfg, const std::optional<fs::path>& checkpoint) {
    auto learner = make_learner(cfg.learner);
    if (learner->meta_trainable()) {
        if (checkpoint) {
            learner->load(load_checkpoint(*checkpoint));
        } else {
            warn("evaluating '" + cfg.learner.method + "' without a checkpoint (untrained initialization)");
        }
    }
    const MetaDataset meta = load_meta_dataset(cfg);
    check_holdout(cfg, meta);
    const SegTask& task = meta.find_task(cfg.target);
    const auto supports = fold_supports(cfg.fold_seed, task.samples.size(), cfg.shots, cfg.folds);

    std::vector<ResultRecord> records;
    for (const auto& point : cfg.sparsity) {
        SparsityParams sp = point;
        sp.seed = derive_seed(cfg.test_seed, "sparsify");
        for (int f = 0; f < cfg.folds; ++f) {
            const auto& support = supports[static_cast<std::size_t>(f)];
            std::vector<std::size_t> query;
            for (std::size_t i = 0; i < task.samples.size(); ++i) {
                if (!std::binary_search(support.begin(), support.end(), i)) query.push_back(i);
            }
            Episode ep;
            try {
                ep = make_episode(task, support, query, sp, Phase::Test,
                                  derive_seed(cfg.test_seed, static_cast<std::uint64_t>(f)), cfg.preprocess);
            } catch (const InfeasibleSparsity& e) {
                throw DataError("fold " + std::to_string(f) + " support cannot be sparsified with " + sp.describe() +
                                ": " + e.what());
            }
            if (cfg.dump_support_masks) {
                for (const auto& s : ep.support) {
                    char name[48];
                    std::snprintf(name, sizeof name, "sample%03zu.png", s.sample_index);
                    write_weak_png(cfg.out_dir / "support_masks" / ("fold" + std::to_string(f)) /
                                       sanitize(sp.describe()) / name,
                                   s.weak);
                }
            }
            const auto t0 = std::chrono::steady_clock::now();
            const auto preds = learner->deploy(ep);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            ResultRecord r;
            r.method = cfg.learner.method;
            r.backbone = std::string(to_string(cfg.learner.model.arch));
            r.style = std::string(to_string(cfg.style));
            r.sparsity = sp.describe();
            r.shots = cfg.shots;
            r.fold = f;
            for (std::size_t i = 0; i < preds.size(); ++i) {
                const auto s = iou(preds[i], ep.query[i].mask);
                r.iou_pos += s.iou_pos;
                r.iou_neg += s.iou_neg;
                r.mean_iou += s.mean_iou;
            }
            const double n = static_cast<double>(preds.size());
            r.iou_pos /= n;
            r.iou_neg /= n;
            r.mean_iou /= n;
            r.wall_time = secs;
            records.push_back(r);
        }
    }
    return records;
}

std::string results_csv_text(const std::vector<ResultRecord>& records, bool include_wall_time) {
    std::ostringstream out;
    std::string header = kCsvHeader;
    if (!include_wall_time) header = header.substr(0, header.rfind(','));
    out << header << '\n';
    for (const auto& r : records) {
        out << r.method << ',' << r.backbone << ',' << r.style << ',' << r.sparsity << ',' << r.shots << ',' << r.fold
            << ',' << fmt_double(r.iou_pos) << ',' << fmt_double(r.iou_neg) << ',' << fmt_double(r.mean_iou);
        if (include_wall_time) out << ',' << fmt_double(r.wall_time);
        out << '\n';
    }
    return out.str();
}

void write_results_csv(const fs::path& path, const std::vector<ResultRecord>& records) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << results_csv_text(records);
}

std::vector<ResultRecord> read_results_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read results file " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw DataError("unexpected results header in " + path.string());
    std::vector<ResultRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 10) throw DataError("malformed results row: " + line);
        try {
            ResultRecord r;
            r.method = f[0];
            r.backbone = f[1];
            r.style = f[2];
            r.sparsity = f[3];
            r.shots = std::stoi(f[4]);
            r.fold = std::stoi(f[5]);
            r.iou_pos = std::stod(f[6]);
            r.iou_neg = std::stod(f[7]);
            r.mean_iou = std::stod(f[8]);
            r.wall_time = std::stod(f[9]);
            out.push_back(r);
        } catch (const std::logic_error&) {
            throw DataError("malformed number in results row: " + line);
        }
    }
    return out;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

namespace {

struct SeriesKey {
    std::string method, backbone;
    int shots;
    auto operator<=>(const SeriesKey&) const = default;
    std::string label() const { return method + "/" + backbone + "/" + std::to_string(shots) + "-shot"; }
};

void draw_plot(const fs::path& path, const std::string& style, const std::vector<std::string>& points,
               const std::map<SeriesKey, std::map<std::string, std::vector<double>>>& series) {
    const int w = 760;
    const int h = 460;
    const int left = 60;
    const int right = 220;
    const int top = 40;
    const int bottom = 90;
    cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
    const int pw = w - left - right;
    const int ph = h - top - bottom;
    auto ypix = [&](double v) { return top + static_cast<int>(std::lround((1.0 - v) * ph)); };
    auto xpix = [&](std::size_t i) {
        return points.size() == 1 ? left + pw / 2
                                  : left + static_cast<int>(std::lround(static_cast<double>(i) * pw / (points.size() - 1)));
    };
    const auto black = cv::Scalar(0, 0, 0);
    const auto grey = cv::Scalar(200, 200, 200);
    cv::rectangle(img, {left, top}, {left + pw, top + ph}, black, 1);
    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        cv::line(img, {left, ypix(v)}, {left + pw, ypix(v)}, grey, 1);
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        cv::putText(img, buf, {left - 35, ypix(v) + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1);
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        cv::line(img, {xpix(i), top + ph}, {xpix(i), top + ph + 5}, black, 1);
        cv::putText(img, points[i], {xpix(i) - 40, top + ph + 20 + 14 * static_cast<int>(i % 2)},
                    cv::FONT_HERSHEY_SIMPLEX, 0.35, black, 1);
    }
    cv::putText(img, "mean IoU vs sparsity (" + style + ")", {left, 25}, cv::FONT_HERSHEY_SIMPLEX, 0.55, black, 1);
    static const cv::Scalar palette[] = {{31, 119, 180}, {14, 127, 255}, {44, 160, 44},  {40, 39, 214},
                                         {189, 103, 148}, {75, 86, 140}, {194, 119, 227}, {127, 127, 127},
                                         {34, 189, 188},  {207, 190, 23}};
    int s = 0;
    for (const auto& [key, by_point] : series) {
        const auto colour = palette[s % 10];
        cv::Point prev(-1, -1);
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto it = by_point.find(points[i]);
            if (it == by_point.end()) {
                prev = {-1, -1};
                continue;
            }
            const cv::Point pt(xpix(i), ypix(std::clamp(mean_std(it->second).first, 0.0, 1.0)));
            cv::circle(img, pt, 3, colour, cv::FILLED);
            if (prev.x >= 0) cv::line(img, prev, pt, colour, 2);
            prev = pt;
        }
        const int ly = top + 10 + 18 * s;
        cv::line(img, {left + pw + 15, ly}, {left + pw + 35, ly}, colour, 2);
        cv::putText(img, key.label(), {left + pw + 40, ly + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.35, black, 1);
        ++s;
    }
    if (!cv::imwrite(path.string(), img)) throw DataError("cannot write plot " + path.string());
}

}  // namespace

ReportFiles emit_report(const std::vector<ResultRecord>& records, const fs::path& out_dir) {
    if (records.empty()) throw DataError("cannot build a report from zero records");
    fs::create_directories(out_dir);
    ReportFiles files;
    files.csv = out_dir / "results.csv";
    write_results_csv(files.csv, records);

    std::vector<std::string> styles;
    for (const auto& r : records) {
        if (std::find(styles.begin(), styles.end(), r.style) == styles.end()) styles.push_back(r.style);
    }
    std::ostringstream md;
    md << "# Results\n";
    for (const auto& style : styles) {
        std::vector<std::string> points;
        std::map<SeriesKey, std::map<std::string, std::vector<double>>> series;
        for (const auto& r : records) {
            if (r.style != style) continue;
            if (std::find(points.begin(), points.end(), r.sparsity) == points.end()) points.push_back(r.sparsity);
            series[{r.method, r.backbone, r.shots}][r.sparsity].push_back(r.mean_iou);
        }
        md << "\n## " << style << "\n\nMean IoU (mean ± std over folds)\n\n| method | backbone | shots |";
        for (const auto& p : points) md << ' ' << p << " |";
        md << "\n|---|---|---|";
        for (std::size_t i = 0; i < points.size(); ++i) md << "---|";
        md << '\n';
        for (const auto& [key, by_point] : series) {
            md << "| " << key.method << " | " << key.backbone << " | " << key.shots << " |";
            for (const auto& p : points) {
                auto it = by_point.find(p);
                if (it == by_point.end()) {
                    md << " - |";
                    continue;
                }
                const auto [m, sd] = mean_std(it->second);
                char cell[64];
                std::snprintf(cell, sizeof cell, " %.3f ± %.3f |", m, sd);
                md << cell;
            }
            md << '\n';
        }
        const auto plot = out_dir / ("plot_" + style + ".png");
        draw_plot(plot, style, points, series);
        files.plots.push_back(plot);
    }
    files.markdown = out_dir / "report.md";
    std::ofstream(files.markdown) << md.str();
    return files;
}

}  // namespace fwseg
