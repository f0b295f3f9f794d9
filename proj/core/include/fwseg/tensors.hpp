#pragma once

#include <vector>

#include <torch/torch.h>

#include "fwseg/episodic.hpp"

namespace fwseg {

/// Label codes inside tensors: 0 negative, 1 positive, 2 unknown.
inline constexpr std::uint8_t kUnknownCode = 2;

/// [n,1,H,W] float32 batch.
torch::Tensor images_to_tensor(const std::vector<Image>& images);
/// [n,H,W] uint8 label batch.
torch::Tensor weak_to_tensor(const std::vector<WeakMask>& masks);
torch::Tensor dense_to_tensor(const std::vector<DenseMask>& masks);

torch::Tensor support_images(const Episode& ep);
torch::Tensor support_labels(const Episode& ep);
torch::Tensor query_images(const Episode& ep);
torch::Tensor query_labels(const Episode& ep);

/// Converts a [n,H,W] (or [n,1,H,W]) boolean/0-1 tensor into masks.
std::vector<DenseMask> tensor_to_masks(const torch::Tensor& binary);

/// Grid <-> [H,W] tensor conversions.
torch::Tensor image_to_tensor(const Image& image);
Image tensor_to_image(const torch::Tensor& t);

}  // namespace fwseg
