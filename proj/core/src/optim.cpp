#include "fwseg/optim.hpp"

#include <cmath>

#include "fwseg/errors.hpp"

namespace fwseg {

Optimizer::Optimizer(OptimConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.kind != "adam" && cfg_.kind != "sgd") throw ConfigError("unknown optimizer '" + cfg_.kind + "'");
    if (!(cfg_.lr > 0.0)) throw ConfigError("learning rate must be positive");
}

void Optimizer::step(ParamSet& params, const ParamSet& grads) {
    torch::NoGradGuard guard;
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        if (!grads.contains(name) || !grads.at(name).defined()) continue;
        auto g = grads.at(name).detach();
        if (cfg_.weight_decay != 0.0) g = g + cfg_.weight_decay * p;
        if (cfg_.kind == "sgd") {
            if (cfg_.momentum != 0.0) {
                if (!m_.contains(name)) m_.set(name, torch::zeros_like(p));
                auto& buf = m_.at(name);
                buf.mul_(cfg_.momentum).add_(g);
                g = buf;
            }
            p.sub_(cfg_.lr * g);
            continue;
        }
        if (!m_.contains(name)) {
            m_.set(name, torch::zeros_like(p));
            v_.set(name, torch::zeros_like(p));
        }
        auto& m = m_.at(name);
        auto& v = v_.at(name);
        m.mul_(cfg_.beta1).add_(g, 1.0 - cfg_.beta1);
        v.mul_(cfg_.beta2).addcmul_(g, g, 1.0 - cfg_.beta2);
        auto denom = (v / bc2).sqrt_().add_(cfg_.eps);
        p.sub_(m / denom * (cfg_.lr / bc1));
    }
}

ParamSet Optimizer::state() const {
    ParamSet out;
    const std::string k = cfg_.kind;
    for (const auto& [n, t] : m_) out.set(k + ".m/" + n, t.clone());
    for (const auto& [n, t] : v_) out.set(k + ".v/" + n, t.clone());
    out.set(k + ".t", torch::tensor({static_cast<float>(t_)}));
    return out;
}

void Optimizer::load_state(const ParamSet& state) {
    const std::string k = cfg_.kind;
    if (!state.contains(k + ".t")) throw DataError("checkpoint has no " + k + " optimizer state");
    t_ = static_cast<std::int64_t>(std::llround(state.at(k + ".t").item<double>()));
    m_ = state.stripped(k + ".m/").clone();
    v_ = state.stripped(k + ".v/").clone();
}

}  // namespace fwseg
