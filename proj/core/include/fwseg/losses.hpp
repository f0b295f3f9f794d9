#pragma once

#include <torch/torch.h>

#include "fwseg/grid.hpp"
#include "fwseg/weak_labels.hpp"

namespace fwseg {

/// Probabilities are clamped to [kProbEps, 1 - kProbEps] before taking logs.
inline constexpr double kProbEps = 1e-7;

/// Selective cross-entropy: binary cross-entropy averaged over labeled pixels.
/// `target` holds codes 0/1/2 (2 = unknown) and must match `probs` in element
/// count. The value is accumulated in double precision in a fixed pixel order
/// and returned in the dtype of `probs`. Supports higher-order gradients.
/// Throws NoLabelsError when no pixel is labeled.
torch::Tensor sce_loss(const torch::Tensor& probs, const torch::Tensor& target);

double sce_loss(const WeakMask& target, const Image& probs);
double sce_loss(const DenseMask& target, const Image& probs);

struct IoUScores {
    double iou_pos = 0.0;
    double iou_neg = 0.0;
    double mean_iou = 0.0;
};

/// Per-class Jaccard index. A class absent from both masks scores 1.
IoUScores iou(const DenseMask& pred, const DenseMask& gt);

}  // namespace fwseg
