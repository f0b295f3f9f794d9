#include "fwseg/meta_metric.hpp"

#include "fwseg/errors.hpp"

namespace fwseg {

namespace {

torch::Tensor pixel_rows(const torch::Tensor& embeddings) {
    if (embeddings.dim() != 4) throw ShapeError("embeddings must be [k,C,H,W]");
    return embeddings.permute({0, 2, 3, 1}).reshape({-1, embeddings.size(1)}).to(torch::kFloat64);
}

torch::Tensor class_mean(const torch::Tensor& rows, const torch::Tensor& flat_codes, int cls) {
    auto w = (flat_codes == cls).to(torch::kFloat64);
    const double count = w.sum().item<double>();
    if (count == 0.0) {
        throw MissingClassError(std::string("no labeled pixel of class ") + (cls == 1 ? "positive" : "negative"));
    }
    return torch::matmul(w, rows) / count;
}

torch::Tensor safe_norm(const torch::Tensor& sq) {
    auto pos = sq > 0;
    return torch::sqrt(torch::where(pos, sq, torch::ones_like(sq))) * pos.to(sq.dtype());
}

}  // namespace

PrototypePair compute_prototypes(const torch::Tensor& embeddings, const torch::Tensor& codes) {
    auto rows = pixel_rows(embeddings);
    auto flat = codes.reshape({-1});
    if (flat.size(0) != rows.size(0)) throw ShapeError("label map does not match the embedding grid");
    return {class_mean(rows, flat, 0), class_mean(rows, flat, 1)};
}

torch::Tensor proto_logits(const torch::Tensor& embeddings, const PrototypePair& protos, Distance metric,
                           double cosine_scale) {
    if (embeddings.dim() != 4 || embeddings.size(1) != protos.mu0.size(0)) {
        throw ShapeError("embedding channels do not match the prototypes");
    }
    auto f = embeddings.to(torch::kFloat64);
    std::vector<torch::Tensor> logits;
    for (const auto* mu : {&protos.mu0, &protos.mu1}) {
        auto m = mu->view({1, -1, 1, 1});
        if (metric == Distance::Euclidean) {
            logits.push_back(-safe_norm((f - m).pow(2).sum(1)));
        } else {
            auto dot = (f * m).sum(1);
            auto denom = safe_norm(f.pow(2).sum(1)) * safe_norm(m.pow(2).sum(1));
            auto ok = denom > 0;
            auto cos = torch::where(ok, dot / torch::where(ok, denom, torch::ones_like(denom)), torch::zeros_like(dot));
            logits.push_back(cosine_scale * cos);
        }
    }
    return torch::stack(logits, 1);
}

torch::Tensor logit_margin(const torch::Tensor& logits2) { return logits2.select(1, 1) - logits2.select(1, 0); }

torch::Tensor positive_prob(const torch::Tensor& logits2) { return torch::sigmoid(logit_margin(logits2)); }

}  // namespace fwseg
