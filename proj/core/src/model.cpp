#include "fwseg/model.hpp"

#include <cmath>
#include <random>

#include "fwseg/errors.hpp"
#include "fwseg/random.hpp"

namespace fwseg {

namespace F = torch::nn::functional;

namespace {

constexpr double kBnEps = 1e-5;

struct ConvOpts {
    int stride = 1;
    int dilation = 1;
    int groups = 1;
};

class Initializer {
public:
    explicit Initializer(std::uint64_t seed) : rng_(make_rng(seed)) {}

    void conv(ParamSet& p, const std::string& name, int in, int out, int k, int groups = 1) {
        const int fan_in = (in / groups) * k * k;
        const double stddev = std::sqrt(2.0 / fan_in);
        auto w = torch::empty({out, in / groups, k, k});
        std::normal_distribution<double> gauss(0.0, stddev);
        auto* d = w.data_ptr<float>();
        for (std::int64_t i = 0; i < w.numel(); ++i) d[i] = static_cast<float>(gauss(rng_));
        p.set(name + ".w", w);
        p.set(name + ".b", torch::zeros({out}));
    }

    void norm(ParamSet& p, const std::string& name, int channels) {
        p.set(name + ".g", torch::ones({channels}));
        p.set(name + ".beta", torch::zeros({channels}));
    }

    void conv_bn(ParamSet& p, const std::string& name, int in, int out, int k, int groups = 1) {
        conv(p, name, in, out, k, groups);
        norm(p, name + "_bn", out);
    }

private:
    Rng rng_;
};

torch::Tensor conv(const ParamSet& p, const std::string& name, const torch::Tensor& x, ConvOpts o = {}) {
    const auto& w = p.at(name + ".w");
    const long k = w.size(2);
    const long pad = o.dilation * (k / 2);
    return torch::conv2d(x, w, p.at(name + ".b"), {o.stride, o.stride}, {pad, pad}, {o.dilation, o.dilation},
                         o.groups);
}

torch::Tensor bn(const ParamSet& p, const std::string& name, const torch::Tensor& x) {
    return torch::batch_norm(x, p.at(name + ".g"), p.at(name + ".beta"), {}, {}, true, 0.0, kBnEps, false);
}

torch::Tensor cbr(const ParamSet& p, const std::string& name, const torch::Tensor& x, ConvOpts o = {}) {
    return torch::relu(bn(p, name + "_bn", conv(p, name, x, o)));
}

torch::Tensor resize_to(const torch::Tensor& x, const torch::Tensor& like) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{like.size(2), like.size(3)})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

void init_phi(Initializer& init, ParamSet& p, const ModelSpec& s) {
    const int c = s.width;
    const int b = s.in_channels;
    switch (s.arch) {
        case Arch::MiniUnet:
            init.conv_bn(p, "phi.enc1a", b, c, 3);
            init.conv_bn(p, "phi.enc1b", c, c, 3);
            init.conv_bn(p, "phi.enc2", c, 2 * c, 3);
            init.conv_bn(p, "phi.mid", 2 * c, 2 * c, 3);
            init.conv_bn(p, "phi.dec2", 4 * c, 2 * c, 3);
            init.conv_bn(p, "phi.dec1", 3 * c, c, 3);
            break;
        case Arch::MiniFcnRes:
            init.conv_bn(p, "phi.stem", b, c, 3);
            for (int i = 1; i <= 3; ++i) {
                init.conv_bn(p, "phi.res" + std::to_string(i) + "a", c, c, 3);
                init.conv_bn(p, "phi.res" + std::to_string(i) + "b", c, c, 3);
            }
            init.conv_bn(p, "phi.refine", c + b, c, 3);
            break;
        case Arch::MiniEfficient:
            init.conv_bn(p, "phi.stem", b, c, 3);
            for (int i = 1; i <= 3; ++i) {
                init.conv_bn(p, "phi.dw" + std::to_string(i), c, c, 3, c);
                init.conv_bn(p, "phi.pw" + std::to_string(i), c, c, 1);
            }
            break;
        case Arch::MiniDilated:
            init.conv_bn(p, "phi.d1", b, c, 3);
            init.conv_bn(p, "phi.d2", c, c, 3);
            init.conv_bn(p, "phi.d4", c, c, 3);
            break;
    }
}

}  // namespace

std::string_view to_string(Arch arch) {
    switch (arch) {
        case Arch::MiniUnet: return "mini-unet";
        case Arch::MiniFcnRes: return "mini-fcn-res";
        case Arch::MiniEfficient: return "mini-efficient";
        case Arch::MiniDilated: return "mini-dilated";
    }
    return "?";
}

Arch parse_arch(std::string_view name) {
    for (Arch a : {Arch::MiniUnet, Arch::MiniFcnRes, Arch::MiniEfficient, Arch::MiniDilated}) {
        if (to_string(a) == name) return a;
    }
    throw ConfigError("unknown backbone '" + std::string(name) + "'");
}

SegModel::SegModel(ModelSpec spec, std::uint64_t seed) : spec_(spec) {
    if (spec.width < 4) throw ConfigError("backbone width must be >= 4, got " + std::to_string(spec.width));
    if (spec.in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (spec.head_in_factor < 1) throw ConfigError("head_in_factor must be >= 1");
    Initializer init(seed);
    init_phi(init, params_, spec);
    init.conv(params_, "head.h1", spec.head_in_factor * spec.width, spec.width, 1);
    init.conv(params_, "head.out", spec.width, 1, 1);
    if (spec.mask_encoder) {
        init.conv(params_, "mask.c1", 3, spec.width, 3);
        init.conv(params_, "mask.c2", spec.width, spec.width, 3);
    }
}

torch::Tensor SegModel::embed(const ParamSet& p, const torch::Tensor& x) const {
    if (x.dim() != 4 || x.size(1) != spec_.in_channels) {
        throw ShapeError("embed expects [n," + std::to_string(spec_.in_channels) + ",H,W] input");
    }
    switch (spec_.arch) {
        case Arch::MiniUnet: {
            auto s1 = cbr(p, "phi.enc1b", cbr(p, "phi.enc1a", x));
            auto s2 = cbr(p, "phi.enc2", torch::max_pool2d(s1, {2, 2}));
            auto m = cbr(p, "phi.mid", torch::max_pool2d(s2, {2, 2}));
            auto d2 = cbr(p, "phi.dec2", torch::cat({resize_to(m, s2), s2}, 1));
            return cbr(p, "phi.dec1", torch::cat({resize_to(d2, s1), s1}, 1));
        }
        case Arch::MiniFcnRes: {
            auto h = cbr(p, "phi.stem", x, {.stride = 2});
            for (int i = 1; i <= 3; ++i) {
                const std::string n = "phi.res" + std::to_string(i);
                auto r = bn(p, n + "b_bn", conv(p, n + "b", cbr(p, n + "a", h)));
                h = torch::relu(h + r);
            }
            return cbr(p, "phi.refine", torch::cat({resize_to(h, x), x}, 1));
        }
        case Arch::MiniEfficient: {
            auto h = cbr(p, "phi.stem", x);
            for (int i = 1; i <= 3; ++i) {
                const std::string n = std::to_string(i);
                auto r = cbr(p, "phi.dw" + n, h, {.groups = spec_.width});
                r = bn(p, "phi.pw" + n + "_bn", conv(p, "phi.pw" + n, r));
                h = torch::relu(h + r);
            }
            return h;
        }
        case Arch::MiniDilated: {
            auto h = cbr(p, "phi.d1", x);
            h = cbr(p, "phi.d2", h, {.dilation = 2});
            return cbr(p, "phi.d4", h, {.dilation = 4});
        }
    }
    throw ConfigError("unhandled backbone");
}

torch::Tensor SegModel::head(const ParamSet& p, const torch::Tensor& f) const {
    if (f.dim() != 4 || f.size(1) != spec_.head_in_factor * spec_.width) {
        throw ShapeError("head expects " + std::to_string(spec_.head_in_factor * spec_.width) + " input channels");
    }
    return conv(p, "head.out", torch::relu(conv(p, "head.h1", f)));
}

std::pair<torch::Tensor, torch::Tensor> SegModel::forward(const ParamSet& p, const torch::Tensor& images) const {
    auto f = embed(p, images);
    return {f, head(p, f)};
}

torch::Tensor SegModel::encode_mask(const ParamSet& p, const torch::Tensor& labels) const {
    if (!spec_.mask_encoder) throw ConfigError("model was built without a mask encoder");
    auto onehot = torch::one_hot(labels.to(torch::kLong), 3).permute({0, 3, 1, 2}).to(torch::kFloat32);
    return conv(p, "mask.c2", torch::relu(conv(p, "mask.c1", onehot)));
}

SegModel build_model(const ModelSpec& spec, std::uint64_t seed) { return SegModel(spec, seed); }

SegModel build_model(std::string_view arch, int width, int in_channels, std::uint64_t seed) {
    ModelSpec s;
    s.arch = parse_arch(arch);
    s.width = width;
    s.in_channels = in_channels;
    return SegModel(s, seed);
}

}  // namespace fwseg
