#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include <torch/torch.h>

#include "fwseg/param_set.hpp"

namespace fwseg {

enum class Arch { MiniUnet, MiniFcnRes, MiniEfficient, MiniDilated };

std::string_view to_string(Arch arch);
/// Accepts "mini-unet", "mini-fcn-res", "mini-efficient", "mini-dilated".
Arch parse_arch(std::string_view name);

struct ModelSpec {
    Arch arch = Arch::MiniUnet;
    int width = 8;        // embedding channels C
    int in_channels = 1;  // image bands B
    /// Head input channels are head_in_factor * C (2 for guidance fusion).
    int head_in_factor = 1;
    /// Adds the weak-mask encoder used by guided networks.
    bool mask_encoder = false;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// A feature extractor phi and a segmentation head h evaluated functionally:
/// every call takes the parameter set explicitly so adapted copies can be
/// pushed through the same graph. Normalization uses the statistics of the
/// batch being processed; there are no running statistics.
class SegModel {
public:
    SegModel(ModelSpec spec, std::uint64_t seed);

    const ModelSpec& spec() const { return spec_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    /// [n,B,H,W] -> [n,C,H,W].
    torch::Tensor embed(const ParamSet& p, const torch::Tensor& images) const;
    /// [n,head_in,H,W] -> [n,1,H,W] positive-class logits.
    torch::Tensor head(const ParamSet& p, const torch::Tensor& features) const;
    /// (embedding, logits) for a plain (unfused) model.
    std::pair<torch::Tensor, torch::Tensor> forward(const ParamSet& p, const torch::Tensor& images) const;
    /// Weak label codes [n,H,W] -> [n,C,H,W] mask features.
    torch::Tensor encode_mask(const ParamSet& p, const torch::Tensor& labels) const;

    std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& images) const {
        return forward(params_, images);
    }

private:
    ModelSpec spec_;
    ParamSet params_;
};

/// Validates the spec (width >= 4, in_channels >= 1) and initializes with
/// Kaiming-normal weights, zero biases and unit normalization gains.
SegModel build_model(const ModelSpec& spec, std::uint64_t seed);
SegModel build_model(std::string_view arch, int width, int in_channels, std::uint64_t seed);

}  // namespace fwseg
