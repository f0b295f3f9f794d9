#include "fwseg/tensors.hpp"

#include <algorithm>

namespace fwseg {

namespace {

template <class T, class F>
torch::Tensor stack_grids(const std::vector<Grid<T>>& grids, torch::ScalarType dtype, F&& convert) {
    if (grids.empty()) throw ShapeError("cannot build a tensor from an empty batch");
    const int h = grids.front().height();
    const int w = grids.front().width();
    auto out = torch::empty({static_cast<long>(grids.size()), h, w}, torch::TensorOptions().dtype(dtype));
    for (std::size_t i = 0; i < grids.size(); ++i) {
        require_same_shape(grids[i], grids.front(), "batch");
        convert(grids[i], out[static_cast<long>(i)]);
    }
    return out;
}

}  // namespace

torch::Tensor images_to_tensor(const std::vector<Image>& images) {
    return stack_grids(images, torch::kFloat32,
                       [](const Image& g, torch::Tensor slot) {
                           std::copy(g.cells().begin(), g.cells().end(), slot.data_ptr<float>());
                       })
        .unsqueeze(1);
}

torch::Tensor weak_to_tensor(const std::vector<WeakMask>& masks) {
    return stack_grids(masks, torch::kUInt8, [](const WeakMask& g, torch::Tensor slot) {
        auto* dst = slot.data_ptr<std::uint8_t>();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] = static_cast<std::uint8_t>(g[i]);
    });
}

torch::Tensor dense_to_tensor(const std::vector<DenseMask>& masks) {
    return stack_grids(masks, torch::kUInt8, [](const DenseMask& g, torch::Tensor slot) {
        auto* dst = slot.data_ptr<std::uint8_t>();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] = g[i] ? 1 : 0;
    });
}

torch::Tensor support_images(const Episode& ep) {
    std::vector<Image> v;
    for (const auto& s : ep.support) v.push_back(s.image);
    return images_to_tensor(v);
}

torch::Tensor support_labels(const Episode& ep) {
    std::vector<WeakMask> v;
    for (const auto& s : ep.support) v.push_back(s.weak);
    return weak_to_tensor(v);
}

torch::Tensor query_images(const Episode& ep) {
    std::vector<Image> v;
    for (const auto& q : ep.query) v.push_back(q.image);
    return images_to_tensor(v);
}

torch::Tensor query_labels(const Episode& ep) {
    std::vector<DenseMask> v;
    for (const auto& q : ep.query) v.push_back(q.mask);
    return dense_to_tensor(v);
}

std::vector<DenseMask> tensor_to_masks(const torch::Tensor& binary) {
    auto t = binary.dim() == 4 ? binary.squeeze(1) : binary;
    t = t.to(torch::kUInt8).contiguous();
    std::vector<DenseMask> out;
    for (long i = 0; i < t.size(0); ++i) {
        DenseMask m(static_cast<int>(t.size(1)), static_cast<int>(t.size(2)));
        const auto* src = t[i].data_ptr<std::uint8_t>();
        for (std::size_t j = 0; j < m.size(); ++j) m[j] = src[j] ? 1 : 0;
        out.push_back(std::move(m));
    }
    return out;
}

torch::Tensor image_to_tensor(const Image& image) { return images_to_tensor({image})[0][0]; }

Image tensor_to_image(const torch::Tensor& t) {
    auto c = t.to(torch::kFloat32).contiguous();
    if (c.dim() != 2) throw ShapeError("tensor_to_image expects a 2-D tensor");
    Image out(static_cast<int>(c.size(0)), static_cast<int>(c.size(1)));
    std::copy(c.data_ptr<float>(), c.data_ptr<float>() + out.size(), out.cells().begin());
    return out;
}

}  // namespace fwseg
