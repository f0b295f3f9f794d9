#include "fwseg/learner.hpp"

#include <algorithm>
#include <cmath>

#include "fwseg/losses.hpp"
#include "fwseg/meta_fusion.hpp"
#include "fwseg/random.hpp"
#include "fwseg/tensors.hpp"

namespace fwseg {

namespace {

constexpr int kAnilDeploySteps = 10;

ModelSpec spec_for(const LearnerConfig& cfg) {
    ModelSpec s = cfg.model;
    if (cfg.method == "guidednet") {
        s.head_in_factor = 2;
        s.mask_encoder = true;
    } else {
        s.head_in_factor = 1;
        s.mask_encoder = false;
    }
    return s;
}

torch::Tensor probs_of(const torch::Tensor& logits) { return torch::sigmoid(logits).squeeze(1); }

ParamSet grads_of(const torch::Tensor& loss, const ParamSet& leaves, const std::string& prefix_filter = "") {
    std::vector<torch::Tensor> inputs;
    std::vector<std::string> names;
    for (const auto& [n, t] : leaves) {
        if (!prefix_filter.empty() && n.rfind(prefix_filter, 0) != 0) continue;
        inputs.push_back(t);
        names.push_back(n);
    }
    auto g = torch::autograd::grad({loss}, inputs, {}, false, false, true);
    ParamSet out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        out.set(names[i], g[i].defined() ? g[i].detach() : torch::zeros_like(inputs[i]));
    }
    return out;
}

void accumulate(ParamSet& acc, const ParamSet& g) {
    for (const auto& [n, t] : g) {
        if (acc.contains(n)) {
            acc.at(n).add_(t);
        } else {
            acc.set(n, t.clone());
        }
    }
}

// ---------------------------------------------------------------- gradient

class GradientLearner : public Learner {
public:
    explicit GradientLearner(const LearnerConfig& cfg) : Learner(cfg) {
        if (cfg_.method == "metasgd") {
            for (const auto& n : adapt_names(params(), AdaptScope::All)) {
                alphas_.set(n, torch::full_like(params().at(n), cfg_.inner_lr));
            }
        }
    }

    torch::Tensor deploy_scores(const Episode& target) const override {
        const auto t = episode_tensors(target);
        InnerConfig inner = inner_config(cfg_.deploy_steps);
        inner.create_graph = false;
        if (anil()) {
            torch::Tensor fs;
            torch::Tensor fq;
            {
                torch::NoGradGuard guard;
                auto f = model_.embed(params(), torch::cat({t.support_images, t.query_images}));
                fs = f.narrow(0, 0, t.support_images.size(0));
                fq = f.narrow(0, t.support_images.size(0), t.query_images.size(0));
            }
            auto loss = [&](const ParamSet& p) { return sce_loss(probs_of(model_.head(p, fs)), t.support_codes); };
            ParamSet adapted = inner_adapt(params(), loss, inner);
            torch::NoGradGuard guard;
            return model_.head(adapted, fq).squeeze(1);
        }
        auto loss = [&](const ParamSet& p) { return model_sce(model_, p, t.support_images, t.support_codes); };
        ParamSet adapted = inner_adapt(params(), loss, inner, alphas_.empty() ? nullptr : &alphas_);
        torch::NoGradGuard guard;
        return model_.forward(adapted, t.query_images).second.squeeze(1);
    }

protected:
    bool anil() const { return cfg_.method == "anil"; }

    InnerConfig inner_config(int steps) const {
        InnerConfig c;
        c.steps = steps;
        c.alpha = cfg_.inner_lr;
        c.scope = anil() ? AdaptScope::HeadOnly : AdaptScope::All;
        return c;
    }

    double do_meta_step(const std::vector<Episode>& episodes) override {
        std::vector<TaskLosses> tasks;
        for (const auto& ep : episodes) {
            auto t = std::make_shared<EpisodeTensors>(episode_tensors(ep));
            if (anil()) {
                struct Cache {
                    torch::Tensor fs, fq;
                };
                auto cache = std::make_shared<Cache>();
                const SegModel* m = &model_;
                tasks.push_back(TaskLosses{
                    [m, t, cache](const ParamSet& p) {
                        return sce_loss(probs_of(m->head(p, cache->fs)), t->support_codes);
                    },
                    [m, t, cache](const ParamSet& p) {
                        return sce_loss(probs_of(m->head(p, cache->fq)), t->query_codes);
                    },
                    [m, t, cache](const ParamSet& p) {
                        auto f = m->embed(p, torch::cat({t->support_images, t->query_images}));
                        cache->fs = f.narrow(0, 0, t->support_images.size(0));
                        cache->fq = f.narrow(0, t->support_images.size(0), t->query_images.size(0));
                    }});
            } else {
                const SegModel* m = &model_;
                tasks.push_back(TaskLosses{
                    [m, t](const ParamSet& p) { return model_sce(*m, p, t->support_images, t->support_codes); },
                    [m, t](const ParamSet& p) { return model_sce(*m, p, t->query_images, t->query_codes); },
                    {}});
            }
        }
        auto mg = second_order_meta_gradient(params(), tasks, inner_config(cfg_.inner_steps),
                                             alphas_.empty() ? nullptr : &alphas_);
        ParamSet all = params();
        for (const auto& [n, a] : alphas_) all.set("alpha/" + n, a);
        ParamSet grads = mg.theta;
        for (const auto& [n, g] : mg.alpha) grads.set("alpha/" + n, g);
        optimizer_.step(all, grads);
        return mg.mean_query_loss;
    }
};

// ---------------------------------------------------------------- reptile

class ReptileLearner : public Learner {
public:
    using Learner::Learner;

    torch::Tensor deploy_scores(const Episode& target) const override {
        const auto t = episode_tensors(target);
        auto loss = [&](const ParamSet& p) { return model_sce(model_, p, t.support_images, t.support_codes); };
        InnerConfig inner;
        inner.steps = cfg_.deploy_steps;
        inner.alpha = cfg_.inner_lr;
        ParamSet adapted = inner_adapt(params(), loss, inner);
        torch::NoGradGuard guard;
        return model_.forward(adapted, t.query_images).second.squeeze(1);
    }

protected:
    double do_meta_step(const std::vector<Episode>& episodes) override {
        std::vector<ParamSet> adapted;
        double loss_sum = 0.0;
        for (const auto& ep : episodes) {
            const auto t = episode_tensors(ep);
            auto images = torch::cat({t.support_images, t.query_images});
            auto codes = torch::cat({t.support_codes, t.query_codes});
            try {
                {
                    torch::NoGradGuard guard;
                    loss_sum += model_sce(model_, params(), images, codes).item<double>();
                }
                auto loss = [&](const ParamSet& p) { return model_sce(model_, p, images, codes); };
                adapted.push_back(reptile_task_params(params(), loss, cfg_.inner_steps, cfg_.inner_lr));
            } catch (const NoLabelsError&) {
            } catch (const MissingClassError&) {
            }
        }
        if (adapted.empty()) throw TrainingError("every episode of the meta-batch failed");
        model_.params() = reptile_interpolate(params(), adapted, cfg_.reptile_epsilon);
        return loss_sum / static_cast<double>(adapted.size());
    }
};

// ---------------------------------------------------------------- metric

class MetricLearner : public Learner {
public:
    using Learner::Learner;

    torch::Tensor deploy_scores(const Episode& target) const override {
        torch::NoGradGuard guard;
        const auto t = episode_tensors(target);
        const auto k = t.support_images.size(0);
        auto f = model_.embed(params(), torch::cat({t.support_images, t.query_images}));
        auto protos = compute_prototypes(f.narrow(0, 0, k), t.support_codes);
        return logit_margin(proto_logits(f.narrow(0, k, t.query_images.size(0)), protos, distance(),
                                         cfg_.cosine_scale));
    }

protected:
    Distance distance() const { return cfg_.method == "panet" ? Distance::Cosine : Distance::Euclidean; }
    double lambda() const { return cfg_.method == "panet" ? cfg_.lambda_par : 0.0; }

    double do_meta_step(const std::vector<Episode>& episodes) override {
        ParamSet leaves = params().leaves();
        torch::Tensor total;
        int used = 0;
        for (const auto& ep : episodes) {
            try {
                auto l = metric_episode_loss(model_, leaves, episode_tensors(ep), distance(), cfg_.cosine_scale,
                                             lambda());
                total = total.defined() ? total + l : l;
                ++used;
            } catch (const NoLabelsError&) {
            } catch (const MissingClassError&) {
            }
        }
        if (used == 0) throw TrainingError("every episode of the meta-batch failed");
        optimizer_.step(model_.params(), grads_of(total, leaves, "phi."));
        return total.item<double>() / used;
    }
};

// ---------------------------------------------------------------- guided nets

class GuidedLearner : public Learner {
public:
    using Learner::Learner;

    torch::Tensor deploy_scores(const Episode& target) const override {
        torch::NoGradGuard guard;
        return logits(params(), episode_tensors(target)).squeeze(1);
    }

protected:
    torch::Tensor logits(const ParamSet& p, const EpisodeTensors& t) const {
        const auto k = t.support_images.size(0);
        if ((t.support_codes != kUnknownCode).sum().item<std::int64_t>() == 0) {
            throw NoLabelsError("guided network support has no labeled pixel");
        }
        auto f = model_.embed(p, torch::cat({t.support_images, t.query_images}));
        auto g = fuse_support(f.narrow(0, 0, k), model_.encode_mask(p, t.support_codes));
        return model_.head(p, fuse_query(f.narrow(0, k, t.query_images.size(0)), g));
    }

    double do_meta_step(const std::vector<Episode>& episodes) override {
        ParamSet leaves = params().leaves();
        ParamSet grads;
        double loss_sum = 0.0;
        int used = 0;
        for (const auto& ep : episodes) {
            try {
                const auto t = episode_tensors(ep);
                auto l = sce_loss(probs_of(logits(leaves, t)), t.query_codes);
                accumulate(grads, grads_of(l, leaves));
                loss_sum += l.item<double>();
                ++used;
            } catch (const NoLabelsError&) {
            } catch (const MissingClassError&) {
            }
        }
        if (used == 0) throw TrainingError("every episode of the meta-batch failed");
        for (auto& [n, g] : grads) g.div_(used);
        optimizer_.step(model_.params(), grads);
        return loss_sum / used;
    }
};

// ---------------------------------------------------------------- linear heads

class LinearHeadLearner : public Learner {
public:
    explicit LinearHeadLearner(const LearnerConfig& cfg) : Learner(cfg) {
        model_.params().set("head.ls_scale", torch::full({1}, static_cast<float>(cfg_.linear_scale_init)));
        model_.params().set("head.ls_bias", torch::zeros({1}));
    }

    torch::Tensor deploy_scores(const Episode& target) const override {
        torch::NoGradGuard guard;
        return margin(params(), episode_tensors(target), target.seed).to(torch::kFloat64);
    }

protected:
    torch::Tensor margin(const ParamSet& p, const EpisodeTensors& t, std::uint64_t seed) const {
        const auto k = t.support_images.size(0);
        auto f = model_.embed(p, torch::cat({t.support_images, t.query_images}));
        auto [x, y] = labeled_rows(f.narrow(0, 0, k), t.support_codes, cfg_.row_cap, derive_seed(seed, "rows"));
        LinearHeadSolution sol = cfg_.method == "r2d2" ? r2d2_solve(x, y, cfg_.ridge_lambda)
                                                       : metaoptnet_solve(x, y, cfg_.svm_c, cfg_.svm_iters);
        auto m = logit_margin(linear_head_logits(f.narrow(0, k, t.query_images.size(0)), sol));
        return p.at("head.ls_scale").to(torch::kFloat64) * m + p.at("head.ls_bias").to(torch::kFloat64);
    }

    double do_meta_step(const std::vector<Episode>& episodes) override {
        ParamSet leaves = params().leaves();
        ParamSet grads;
        double loss_sum = 0.0;
        int used = 0;
        for (const auto& ep : episodes) {
            try {
                const auto t = episode_tensors(ep);
                auto l = sce_loss(torch::sigmoid(margin(leaves, t, ep.seed)), t.query_codes);
                ParamSet g = grads_of(l, leaves);
                for (const auto& n : g.names("head.")) {
                    if (n != "head.ls_scale" && n != "head.ls_bias") g.erase(n);
                }
                accumulate(grads, g);
                loss_sum += l.item<double>();
                ++used;
            } catch (const NoLabelsError&) {
            } catch (const MissingClassError&) {
            }
        }
        if (used == 0) throw TrainingError("every episode of the meta-batch failed");
        for (auto& [n, g] : grads) g.div_(used);
        optimizer_.step(model_.params(), grads);
        return loss_sum / used;
    }
};

// ---------------------------------------------------------------- baseline

class BaselineLearner : public Learner {
public:
    using Learner::Learner;

    bool meta_trainable() const override { return false; }

    torch::Tensor deploy_scores(const Episode& target) const override {
        const auto t = episode_tensors(target);
        SegModel fresh = build_model(spec_for(cfg_), derive_seed(cfg_.seed, "baseline"));
        OptimConfig oc;
        oc.lr = cfg_.baseline_lr;
        Optimizer opt(oc);
        for (int step = 0; step < cfg_.baseline_steps; ++step) {
            ParamSet leaves = fresh.params().leaves();
            auto l = model_sce(fresh, leaves, t.support_images, t.support_codes);
            opt.step(fresh.params(), grads_of(l, leaves));
        }
        torch::NoGradGuard guard;
        return fresh.forward(t.query_images).second.squeeze(1);
    }

protected:
    double do_meta_step(const std::vector<Episode>&) override {
        throw ConfigError("the from-scratch baseline is not meta-trained");
    }
};

}  // namespace

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names{"maml",      "metasgd", "anil", "reptile",    "protonet",
                                                "panet",     "guidednet", "r2d2", "metaoptnet", "baseline"};
    return names;
}

bool is_gradient_method(const std::string& m) {
    return m == "maml" || m == "metasgd" || m == "anil" || m == "reptile";
}

LearnerConfig resolve_defaults(LearnerConfig cfg) {
    const auto& names = method_names();
    if (std::find(names.begin(), names.end(), cfg.method) == names.end()) {
        throw ConfigError("unknown method '" + cfg.method + "'");
    }
    if (cfg.inner_steps < 0) {
        cfg.inner_steps = cfg.method == "anil" ? 10 : cfg.method == "reptile" ? 5 : 2;
    }
    if (cfg.deploy_steps < 0) cfg.deploy_steps = cfg.inner_steps;
    if (cfg.baseline_steps < 0) cfg.baseline_steps = 10 * kAnilDeploySteps;
    if (!cfg.outer_set) {
        cfg.outer = OptimConfig{};
        if (cfg.method == "r2d2" || cfg.method == "metaoptnet") {
            cfg.outer.kind = "sgd";
            cfg.outer.lr = 0.01;
            cfg.outer.momentum = 0.9;
        }
    }
    if (is_gradient_method(cfg.method) && cfg.inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
    if (!(cfg.inner_lr > 0.0)) throw ConfigError("inner_lr must be positive");
    if (!(cfg.reptile_epsilon > 0.0)) throw ConfigError("reptile_epsilon must be positive");
    if (!(cfg.ridge_lambda > 0.0)) throw ConfigError("ridge_lambda must be positive");
    if (!(cfg.svm_c > 0.0)) throw ConfigError("svm_c must be positive");
    if (cfg.svm_iters < 0) throw ConfigError("svm_iters must be >= 0");
    if (cfg.lambda_par < 0.0) throw ConfigError("lambda_par must be >= 0");
    return cfg;
}

Learner::Learner(const LearnerConfig& cfg)
    : cfg_(resolve_defaults(cfg)), model_(spec_for(cfg_), derive_seed(cfg_.seed, "init")), optimizer_(cfg_.outer) {}

double Learner::meta_step(const std::vector<Episode>& episodes) {
    if (episodes.empty()) throw TrainingError("meta-step needs at least one episode");
    const double loss = do_meta_step(episodes);
    ++steps_done_;
    return loss;
}

std::vector<DenseMask> Learner::deploy(const Episode& target) const {
    return tensor_to_masks(deploy_scores(target) > 0);
}

Checkpoint Learner::to_checkpoint() const {
    Checkpoint c;
    const auto& s = model_.spec();
    c.header["method"] = cfg_.method;
    c.header["arch"] = std::string(to_string(s.arch));
    c.header["width"] = std::to_string(s.width);
    c.header["in_channels"] = std::to_string(s.in_channels);
    c.header["meta_step"] = std::to_string(steps_done_);
    c.tensors = model_.params().clone();
    for (const auto& [n, t] : alphas_) c.tensors.set("alpha/" + n, t.clone());
    c.tensors.merge(optimizer_.state());
    return c;
}

void Learner::load(const Checkpoint& ckpt) {
    const auto& s = model_.spec();
    auto expect = [&](const char* key, const std::string& value) {
        auto it = ckpt.header.find(key);
        if (it == ckpt.header.end() || it->second != value) {
            throw ConfigError(std::string("checkpoint ") + key + " does not match the configuration (expected " +
                              value + ")");
        }
    };
    expect("method", cfg_.method);
    expect("arch", std::string(to_string(s.arch)));
    expect("width", std::to_string(s.width));
    expect("in_channels", std::to_string(s.in_channels));
    for (auto& [n, t] : model_.params()) {
        if (!ckpt.tensors.contains(n)) throw ConfigError("checkpoint lacks parameter " + n);
        const auto& src = ckpt.tensors.at(n);
        if (src.sizes() != t.sizes()) throw ConfigError("checkpoint parameter " + n + " has the wrong shape");
        t = src.clone();
    }
    for (auto& [n, t] : alphas_) {
        if (!ckpt.tensors.contains("alpha/" + n)) throw ConfigError("checkpoint lacks step size for " + n);
        t = ckpt.tensors.at("alpha/" + n).clone();
    }
    const std::string kind = optimizer_.config().kind;
    if (ckpt.tensors.contains(kind + ".t")) optimizer_.load_state(ckpt.tensors.subset(kind + "."));
    steps_done_ = std::stoll(ckpt.header.at("meta_step"));
}

std::unique_ptr<Learner> make_learner(const LearnerConfig& raw) {
    const LearnerConfig cfg = resolve_defaults(raw);
    const auto& m = cfg.method;
    if (m == "maml" || m == "metasgd" || m == "anil") return std::make_unique<GradientLearner>(cfg);
    if (m == "reptile") return std::make_unique<ReptileLearner>(cfg);
    if (m == "protonet" || m == "panet") return std::make_unique<MetricLearner>(cfg);
    if (m == "guidednet") return std::make_unique<GuidedLearner>(cfg);
    if (m == "r2d2" || m == "metaoptnet") return std::make_unique<LinearHeadLearner>(cfg);
    return std::make_unique<BaselineLearner>(cfg);
}

EpisodeTensors episode_tensors(const Episode& ep) {
    if (ep.support.empty() || ep.query.empty()) throw EpisodeSamplingError("episode needs support and query samples");
    return {support_images(ep), support_labels(ep), query_images(ep), query_labels(ep)};
}

torch::Tensor model_sce(const SegModel& model, const ParamSet& p, const torch::Tensor& images,
                        const torch::Tensor& codes) {
    return sce_loss(probs_of(model.forward(p, images).second), codes);
}

torch::Tensor metric_episode_loss(const SegModel& model, const ParamSet& p, const EpisodeTensors& t, Distance metric,
                                  double cosine_scale, double lambda_par) {
    const auto k = t.support_images.size(0);
    auto f = model.embed(p, torch::cat({t.support_images, t.query_images}));
    auto fs = f.narrow(0, 0, k);
    auto fq = f.narrow(0, k, t.query_images.size(0));
    auto loss = sce_loss(positive_prob(proto_logits(fq, compute_prototypes(fs, t.support_codes), metric,
                                                    cosine_scale)),
                         t.query_codes);
    if (lambda_par > 0.0) {
        auto aligned = positive_prob(proto_logits(fs, compute_prototypes(fq, t.query_codes), metric, cosine_scale));
        loss = loss + lambda_par * sce_loss(aligned, t.support_codes);
    }
    return loss;
}

}  // namespace fwseg
