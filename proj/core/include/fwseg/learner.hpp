#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fwseg/checkpoint.hpp"
#include "fwseg/episodic.hpp"
#include "fwseg/meta_gradient.hpp"
#include "fwseg/meta_metric.hpp"
#include "fwseg/model.hpp"
#include "fwseg/optim.hpp"

namespace fwseg {

/// Hyperparameters shared by all learners. Negative values mean "use the
/// method default" and are resolved by resolve_defaults().
struct LearnerConfig {
    std::string method = "protonet";
    ModelSpec model{};
    std::uint64_t seed = 1;

    int inner_steps = -1;      // maml/metasgd 2, anil 10, reptile 5
    double inner_lr = 0.1;     // SGD step of the inner loop (MetaSGD initial alpha)
    int deploy_steps = -1;     // adaptation steps at deployment (default inner_steps)
    double reptile_epsilon = 0.5;

    OptimConfig outer{};
    bool outer_set = false;  // true when `outer` came from the user

    double cosine_scale = 20.0;
    double lambda_par = 1.0;

    double ridge_lambda = 1.0;
    double svm_c = 0.1;
    int svm_iters = 15;
    int row_cap = 2048;
    double linear_scale_init = 5.0;

    int baseline_steps = -1;  // default 10 x the ANIL deployment budget
    double baseline_lr = 1e-3;
};

/// The nine meta-learners plus "baseline".
const std::vector<std::string>& method_names();
bool is_gradient_method(const std::string& method);

/// Fills every "method default" field and validates the result.
LearnerConfig resolve_defaults(LearnerConfig cfg);

/// Trainable state of one method: model parameters (phi, head, optional mask
/// encoder), MetaSGD step sizes and the outer optimizer.
class Learner {
public:
    explicit Learner(const LearnerConfig& cfg);
    virtual ~Learner() = default;

    const LearnerConfig& config() const { return cfg_; }
    const std::string& method() const { return cfg_.method; }
    SegModel& model() { return model_; }
    const SegModel& model() const { return model_; }
    ParamSet& params() { return model_.params(); }
    const ParamSet& params() const { return model_.params(); }
    /// MetaSGD per-parameter step sizes (empty for other methods).
    ParamSet& alphas() { return alphas_; }
    Optimizer& optimizer() { return optimizer_; }
    std::int64_t meta_steps_done() const { return steps_done_; }

    /// One outer update from a meta-batch. Returns the mean training loss of
    /// the episodes that were used.
    double meta_step(const std::vector<Episode>& episodes);

    /// Query scores [n,H,W]; class 1 is predicted where the score is > 0.
    /// Never modifies the learner.
    virtual torch::Tensor deploy_scores(const Episode& target) const = 0;
    std::vector<DenseMask> deploy(const Episode& target) const;

    virtual bool meta_trainable() const { return true; }

    Checkpoint to_checkpoint() const;
    /// Restores parameters, step sizes, optimizer state and step counter.
    /// Throws ConfigError when the checkpoint was written for another setup.
    void load(const Checkpoint& ckpt);

protected:
    virtual double do_meta_step(const std::vector<Episode>& episodes) = 0;

    LearnerConfig cfg_;
    SegModel model_;
    ParamSet alphas_;
    Optimizer optimizer_;
    std::int64_t steps_done_ = 0;
};

std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg);

// Building blocks exposed for testing.

/// Support and query batches of an episode as tensors.
struct EpisodeTensors {
    torch::Tensor support_images;  // [k,1,H,W]
    torch::Tensor support_codes;   // [k,H,W] 0/1/2
    torch::Tensor query_images;    // [n,1,H,W]
    torch::Tensor query_codes;     // [n,H,W] 0/1
};
EpisodeTensors episode_tensors(const Episode& ep);

/// SCE of sigmoid(h(phi(x))) against `codes`.
torch::Tensor model_sce(const SegModel& model, const ParamSet& p, const torch::Tensor& images,
                        const torch::Tensor& codes);

/// Forward loss of ProtoNet, plus lambda_par times the alignment loss for PANet.
torch::Tensor metric_episode_loss(const SegModel& model, const ParamSet& p, const EpisodeTensors& ep, Distance metric,
                                  double cosine_scale, double lambda_par);

}  // namespace fwseg
