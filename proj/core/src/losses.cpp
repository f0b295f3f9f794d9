#include "fwseg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "fwseg/tensors.hpp"

namespace fwseg {

namespace {

using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

template <class T>
double sce_forward_loop(const T* p, const std::uint8_t* t, std::int64_t n, std::int64_t& labeled) {
    const T lo = static_cast<T>(kProbEps);
    const T hi = static_cast<T>(1.0) - static_cast<T>(kProbEps);
    double sum = 0.0;
    labeled = 0;
    for (std::int64_t j = 0; j < n; ++j) {
        if (t[j] == kUnknownCode) continue;
        const double pc = static_cast<double>(std::clamp(p[j], lo, hi));
        sum += t[j] == 1 ? std::log(pc) : std::log(1.0 - pc);
        ++labeled;
    }
    return sum;
}

class SceFunction : public torch::autograd::Function<SceFunction> {
public:
    static torch::Tensor forward(AutogradContext* ctx, torch::Tensor probs, torch::Tensor target) {
        auto p = probs.contiguous();
        auto t = target.to(torch::kUInt8).contiguous();
        if (p.numel() != t.numel()) throw ShapeError("sce_loss: probs and target differ in size");
        std::int64_t labeled = 0;
        double sum = 0.0;
        if (p.scalar_type() == torch::kFloat64) {
            sum = sce_forward_loop(p.data_ptr<double>(), t.data_ptr<std::uint8_t>(), p.numel(), labeled);
        } else if (p.scalar_type() == torch::kFloat32) {
            sum = sce_forward_loop(p.data_ptr<float>(), t.data_ptr<std::uint8_t>(), p.numel(), labeled);
        } else {
            throw ShapeError("sce_loss: probs must be float32 or float64");
        }
        if (labeled == 0) throw NoLabelsError("sce_loss: target has no labeled pixel");
        ctx->save_for_backward({probs, t.view(probs.sizes())});
        ctx->saved_data["n"] = labeled;
        return torch::full({}, -sum / static_cast<double>(labeled), probs.options().requires_grad(false));
    }

    static variable_list backward(AutogradContext* ctx, variable_list grad_out) {
        auto saved = ctx->get_saved_variables();
        const auto& p = saved[0];
        const auto& t = saved[1];
        const double n = static_cast<double>(ctx->saved_data["n"].toInt());
        const bool single = p.scalar_type() == torch::kFloat32;
        const double lo = single ? static_cast<double>(static_cast<float>(kProbEps)) : kProbEps;
        const double hi = single ? static_cast<double>(1.0f - static_cast<float>(kProbEps)) : 1.0 - kProbEps;
        const auto opts = p.options();
        auto labeled = (t != kUnknownCode).to(opts.dtype());
        auto y = (t == 1).to(opts.dtype());
        auto active = ((p >= lo) & (p <= hi)).to(opts.dtype());
        auto pc = p.clamp(lo, hi);
        auto g = -(y / pc - (1.0 - y) / (1.0 - pc)) * labeled * active / n;
        return {g * grad_out[0], torch::Tensor()};
    }
};

}  // namespace

torch::Tensor sce_loss(const torch::Tensor& probs, const torch::Tensor& target) {
    return SceFunction::apply(probs, target);
}

double sce_loss(const WeakMask& target, const Image& probs) {
    require_same_shape(target, probs, "sce_loss");
    return sce_loss(image_to_tensor(probs), weak_to_tensor({target})[0]).item<double>();
}

double sce_loss(const DenseMask& target, const Image& probs) {
    require_same_shape(target, probs, "sce_loss");
    return sce_loss(image_to_tensor(probs), dense_to_tensor({target})[0]).item<double>();
}

IoUScores iou(const DenseMask& pred, const DenseMask& gt) {
    require_same_shape(pred, gt, "iou");
    std::size_t inter[2] = {0, 0};
    std::size_t uni[2] = {0, 0};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i] ? 1 : 0;
        const int g = gt[i] ? 1 : 0;
        for (int c = 0; c < 2; ++c) {
            const bool pc = p == c;
            const bool gc = g == c;
            inter[c] += pc && gc;
            uni[c] += pc || gc;
        }
    }
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 1.0 : static_cast<double>(a) / b; };
    IoUScores s;
    s.iou_neg = ratio(inter[0], uni[0]);
    s.iou_pos = ratio(inter[1], uni[1]);
    s.mean_iou = 0.5 * (s.iou_pos + s.iou_neg);
    return s;
}

}  // namespace fwseg
