#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fwseg/param_set.hpp"

namespace fwseg {

/// Scalar loss as a function of a parameter set.
using LossFn = std::function<torch::Tensor(const ParamSet&)>;

enum class AdaptScope { All, HeadOnly };

/// Names updated by the inner loop: every "phi." and "head." entry for
/// AdaptScope::All, only "head." entries for AdaptScope::HeadOnly. Parameters
/// outside those groups are never adapted.
std::vector<std::string> adapt_names(const ParamSet& theta, AdaptScope scope);

struct InnerConfig {
    int steps = 2;
    double alpha = 0.1;
    AdaptScope scope = AdaptScope::All;
    /// Keep the graph through the inner steps (second-order meta-gradients).
    bool create_graph = false;
};

/// `steps` plain gradient steps theta <- theta - alpha * grad on `loss`.
/// When `alphas` is given (MetaSGD) the step is elementwise alphas[name] * grad.
/// With steps == 0 the input tensors are returned unchanged.
ParamSet inner_adapt(const ParamSet& theta, const LossFn& loss, const InnerConfig& cfg,
                     const ParamSet* alphas = nullptr);

/// The two losses of one episode. `prepare`, when set, is invoked once with
/// the differentiable parameters before adaptation (used to cache frozen
/// feature maps for head-only adaptation).
struct TaskLosses {
    LossFn support;
    LossFn query;
    std::function<void(const ParamSet&)> prepare;
};

struct MetaGradient {
    ParamSet theta;  // gradient for every entry of theta
    ParamSet alpha;  // gradient for the MetaSGD step sizes (empty otherwise)
    double mean_query_loss = 0.0;
    int used_tasks = 0;
};

/// Mean over tasks of d L_query(adapt(theta)) / d theta, differentiating
/// through the inner steps (and through `alphas` when given). Tasks whose
/// losses throw NoLabelsError or MissingClassError are skipped; if every task
/// fails a TrainingError is raised.
MetaGradient second_order_meta_gradient(const ParamSet& theta, const std::vector<TaskLosses>& tasks,
                                        InnerConfig inner, const ParamSet* alphas = nullptr);

/// First-order adaptation used by Reptile (no graph retained).
ParamSet reptile_task_params(const ParamSet& theta, const LossFn& loss, int steps, double lr);

/// theta + epsilon * (mean_i task_params[i] - theta), entry by entry.
ParamSet reptile_interpolate(const ParamSet& theta, const std::vector<ParamSet>& task_params, double epsilon);

}  // namespace fwseg
