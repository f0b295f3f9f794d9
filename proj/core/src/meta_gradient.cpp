#include "fwseg/meta_gradient.hpp"

#include "fwseg/errors.hpp"

namespace fwseg {

std::vector<std::string> adapt_names(const ParamSet& theta, AdaptScope scope) {
    auto names = theta.names("head.");
    if (scope == AdaptScope::All) {
        auto phi = theta.names("phi.");
        names.insert(names.begin(), phi.begin(), phi.end());
    }
    return names;
}

ParamSet inner_adapt(const ParamSet& theta, const LossFn& loss, const InnerConfig& cfg, const ParamSet* alphas) {
    if (cfg.steps < 0) throw ParameterError("inner steps must be >= 0");
    ParamSet cur = theta;
    if (cfg.steps == 0) return cur;
    const auto names = adapt_names(theta, cfg.scope);
    if (names.empty()) throw ConfigError("no parameters to adapt");

    if (!cfg.create_graph) {
        for (const auto& n : names) cur.set(n, theta.at(n).detach().requires_grad_(true));
    }
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<torch::Tensor> inputs;
        for (const auto& n : names) inputs.push_back(cur.at(n));
        auto l = loss(cur);
        auto grads = torch::autograd::grad({l}, inputs, {}, cfg.create_graph, cfg.create_graph, true);
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!grads[i].defined()) continue;
            const auto& n = names[i];
            torch::Tensor next;
            if (alphas != nullptr) {
                next = cur.at(n) - alphas->at(n) * grads[i];
            } else {
                next = cur.at(n) - cfg.alpha * grads[i];
            }
            if (!cfg.create_graph) next = next.detach().requires_grad_(true);
            cur.set(n, next);
        }
    }
    if (!cfg.create_graph) {
        for (const auto& n : names) cur.set(n, cur.at(n).detach());
    }
    return cur;
}

MetaGradient second_order_meta_gradient(const ParamSet& theta, const std::vector<TaskLosses>& tasks,
                                        InnerConfig inner, const ParamSet* alphas) {
    if (tasks.empty()) throw TrainingError("meta-step needs at least one episode");
    inner.create_graph = true;
    MetaGradient out;
    out.theta = theta.zeros_like();
    if (alphas != nullptr) out.alpha = alphas->zeros_like();
    double loss_sum = 0.0;

    for (const auto& task : tasks) {
        ParamSet th = theta.leaves();
        ParamSet al;
        if (alphas != nullptr) al = alphas->leaves();
        try {
            if (task.prepare) task.prepare(th);
            ParamSet adapted = inner_adapt(th, task.support, inner, alphas != nullptr ? &al : nullptr);
            auto lq = task.query(adapted);
            std::vector<torch::Tensor> inputs;
            std::vector<std::pair<bool, std::string>> slots;
            for (const auto& [n, t] : th) {
                inputs.push_back(t);
                slots.emplace_back(false, n);
            }
            for (const auto& [n, t] : al) {
                inputs.push_back(t);
                slots.emplace_back(true, n);
            }
            auto grads = torch::autograd::grad({lq}, inputs, {}, false, false, true);
            for (std::size_t i = 0; i < grads.size(); ++i) {
                if (!grads[i].defined()) continue;
                auto& dst = slots[i].first ? out.alpha.at(slots[i].second) : out.theta.at(slots[i].second);
                dst.add_(grads[i].detach());
            }
            loss_sum += lq.item<double>();
            ++out.used_tasks;
        } catch (const NoLabelsError&) {
        } catch (const MissingClassError&) {
        }
    }
    if (out.used_tasks == 0) throw TrainingError("every episode of the meta-batch failed");
    const double inv = 1.0 / out.used_tasks;
    for (auto& [n, g] : out.theta) g.mul_(inv);
    for (auto& [n, g] : out.alpha) g.mul_(inv);
    out.mean_query_loss = loss_sum * inv;
    return out;
}

ParamSet reptile_task_params(const ParamSet& theta, const LossFn& loss, int steps, double lr) {
    InnerConfig cfg;
    cfg.steps = steps;
    cfg.alpha = lr;
    cfg.scope = AdaptScope::All;
    cfg.create_graph = false;
    return inner_adapt(theta, loss, cfg).clone();
}

ParamSet reptile_interpolate(const ParamSet& theta, const std::vector<ParamSet>& task_params, double epsilon) {
    if (task_params.empty()) throw TrainingError("reptile needs at least one adapted parameter set");
    ParamSet out;
    const float n = static_cast<float>(task_params.size());
    const float eps = static_cast<float>(epsilon);
    for (const auto& [name, t] : theta) {
        auto base = t.detach().to(torch::kFloat32).contiguous();
        std::vector<torch::Tensor> adapted;
        for (const auto& tp : task_params) adapted.push_back(tp.at(name).detach().to(torch::kFloat32).contiguous());
        std::vector<const float*> src;
        for (const auto& a : adapted) src.push_back(a.data_ptr<float>());
        auto result = torch::empty_like(base);
        const float* th = base.data_ptr<float>();
        float* dst = result.data_ptr<float>();
        for (std::int64_t j = 0; j < base.numel(); ++j) {
            float acc = 0.0f;
            for (const float* a : src) acc += a[j];
            const float mean = acc / n;
            dst[j] = th[j] + eps * (mean - th[j]);
        }
        out.set(name, result);
    }
    return out;
}

}  // namespace fwseg
