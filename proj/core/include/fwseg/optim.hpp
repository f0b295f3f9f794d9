#pragma once

#include <string>

#include "fwseg/param_set.hpp"

namespace fwseg {

struct OptimConfig {
    std::string kind = "adam";  // "adam" or "sgd"
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double momentum = 0.0;  // sgd only
    double weight_decay = 0.0;
};

/// First-order optimizer over a ParamSet. Parameters without a gradient entry
/// are left untouched. The moment buffers are exposed so checkpoints can
/// restore them exactly.
class Optimizer {
public:
    explicit Optimizer(OptimConfig cfg);

    const OptimConfig& config() const { return cfg_; }
    std::int64_t steps() const { return t_; }

    /// In-place update of `params` (autograd disabled).
    void step(ParamSet& params, const ParamSet& grads);

    /// Buffers keyed as "<kind>.<buffer>/<param>" plus "<kind>.t".
    ParamSet state() const;
    void load_state(const ParamSet& state);

private:
    OptimConfig cfg_;
    std::int64_t t_ = 0;
    ParamSet m_;
    ParamSet v_;
};

}  // namespace fwseg
