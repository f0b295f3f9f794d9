#pragma once

#include <torch/torch.h>

namespace fwseg {

/// Background (mu0) and foreground (mu1) centroids, float64 [C].
struct PrototypePair {
    torch::Tensor mu0;
    torch::Tensor mu1;
};

enum class Distance { Euclidean, Cosine };

/// Means of the embeddings [k,C,H,W] over pixels labeled 0 and 1 in `codes`
/// [k,H,W] (code 2 = unknown, excluded). Computed in float64.
/// Throws MissingClassError when a class has no labeled pixel.
PrototypePair compute_prototypes(const torch::Tensor& embeddings, const torch::Tensor& codes);

/// [n,2,H,W] float64 class logits: -||f - mu_c|| (euclidean) or
/// scale * cos(f, mu_c) (cosine, zero-norm vectors give cos = 0).
torch::Tensor proto_logits(const torch::Tensor& embeddings, const PrototypePair& protos, Distance metric,
                           double cosine_scale = 20.0);

/// Two-way softmax probability of class 1, i.e. sigmoid(l1 - l0), [n,H,W].
torch::Tensor positive_prob(const torch::Tensor& logits2);

/// l1 - l0; class 1 is predicted where this is strictly positive.
torch::Tensor logit_margin(const torch::Tensor& logits2);

}  // namespace fwseg
