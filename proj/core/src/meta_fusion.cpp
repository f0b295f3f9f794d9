#include "fwseg/meta_fusion.hpp"

#include <algorithm>
#include <numeric>

#include "fwseg/errors.hpp"
#include "fwseg/random.hpp"

namespace fwseg {

torch::Tensor fuse_support(const torch::Tensor& f_sup, const torch::Tensor& f_m) {
    if (f_sup.dim() != 4 || f_sup.sizes() != f_m.sizes()) throw ShapeError("fuse_support: shape mismatch");
    return (f_sup * f_m).mean(std::vector<int64_t>{0, 2, 3});
}

torch::Tensor fuse_query(const torch::Tensor& f_qry, const torch::Tensor& guidance) {
    if (f_qry.dim() != 4 || guidance.dim() != 1 || guidance.size(0) != f_qry.size(1)) {
        throw ShapeError("fuse_query: guidance length must equal the query channel count");
    }
    auto tiled = guidance.to(f_qry.dtype()).view({1, -1, 1, 1}).expand_as(f_qry);
    return torch::cat({f_qry, tiled}, 1);
}

LinearHeadSolution r2d2_solve(const torch::Tensor& x, const torch::Tensor& y, double lambda, RidgeForm form) {
    if (x.dim() != 2 || y.dim() != 2 || x.size(0) != y.size(0) || y.size(1) != 2) {
        throw ShapeError("r2d2_solve expects X [N,C] and Y [N,2]");
    }
    if (x.size(0) < 1) throw MissingClassError("r2d2_solve needs at least one labeled pixel");
    const double lam = std::max(lambda, kRidgeLambdaFloor);
    auto xd = x.to(torch::kFloat64);
    auto yd = y.to(torch::kFloat64);
    const auto n = xd.size(0);
    const auto c = xd.size(1);
    if (form == RidgeForm::Auto) form = n <= c ? RidgeForm::Woodbury : RidgeForm::Primal;
    torch::Tensor w;
    if (form == RidgeForm::Woodbury) {
        auto gram = torch::matmul(xd, xd.t()) + lam * torch::eye(n, torch::kFloat64);
        w = torch::matmul(xd.t(), torch::linalg_solve(gram, yd));
    } else {
        auto gram = torch::matmul(xd.t(), xd) + lam * torch::eye(c, torch::kFloat64);
        w = torch::linalg_solve(gram, torch::matmul(xd.t(), yd));
    }
    return {w, torch::zeros({2}, torch::kFloat64), lam};
}

LinearHeadSolution metaoptnet_solve(const torch::Tensor& x, const torch::Tensor& y, double c_svm, int iters,
                                    SvmTrace* trace) {
    if (x.dim() != 2 || y.dim() != 2 || x.size(0) != y.size(0) || y.size(1) != 2) {
        throw ShapeError("metaoptnet_solve expects X [N,C] and Y [N,2]");
    }
    if (!(c_svm > 0.0)) throw ParameterError("SVM box constraint must be positive");
    if (iters < 0) throw ParameterError("SVM iterations must be >= 0");
    auto xd = x.to(torch::kFloat64);
    auto yd = y.to(torch::kFloat64);
    const double pos = yd.select(1, 1).sum().item<double>();
    if (pos == 0.0 || pos == static_cast<double>(yd.size(0))) {
        throw MissingClassError("metaoptnet_solve needs both classes in the support");
    }
    auto sign = yd.select(1, 1) * 2.0 - 1.0;
    auto q = torch::matmul(xd, xd.t()) * sign.unsqueeze(1) * sign.unsqueeze(0);
    double bound = 0.0;
    {
        torch::NoGradGuard guard;
        const double fro = q.norm().item<double>();
        const double inf = q.abs().sum(1).max().item<double>();
        bound = std::min(fro, inf);
    }
    const double eta = bound > 0.0 ? 1.0 / bound : 1.0;
    auto alpha = torch::zeros({xd.size(0)}, torch::kFloat64);
    auto objective = [&](const torch::Tensor& a) {
        torch::NoGradGuard guard;
        return (a.sum() - 0.5 * torch::dot(a, torch::mv(q, a))).item<double>();
    };
    if (trace) trace->objective.push_back(objective(alpha));
    for (int it = 0; it < iters; ++it) {
        alpha = torch::clamp(alpha + eta * (1.0 - torch::mv(q, alpha)), 0.0, c_svm);
        if (trace) trace->objective.push_back(objective(alpha));
    }
    if (trace) trace->alpha = alpha.detach().clone();
    auto w = torch::matmul(xd.t(), alpha * sign);
    return {torch::stack({-0.5 * w, 0.5 * w}, 1), torch::zeros({2}, torch::kFloat64), 0.0};
}

torch::Tensor linear_head_logits(const torch::Tensor& features, const LinearHeadSolution& sol) {
    if (features.dim() != 4 || features.size(1) != sol.weights.size(0)) {
        throw ShapeError("linear head: feature channels do not match the solution");
    }
    auto f = features.to(torch::kFloat64).permute({0, 2, 3, 1});
    auto logits = torch::matmul(f, sol.weights) + sol.bias;
    return logits.permute({0, 3, 1, 2});
}

std::pair<torch::Tensor, torch::Tensor> labeled_rows(const torch::Tensor& embeddings, const torch::Tensor& codes,
                                                     int cap, std::uint64_t seed) {
    if (embeddings.dim() != 4) throw ShapeError("embeddings must be [k,C,H,W]");
    auto rows = embeddings.permute({0, 2, 3, 1}).reshape({-1, embeddings.size(1)});
    auto flat = codes.reshape({-1}).to(torch::kLong);
    if (flat.size(0) != rows.size(0)) throw ShapeError("label map does not match the embedding grid");
    auto idx = torch::nonzero(flat != 2).reshape({-1});
    if (cap > 0 && idx.size(0) > cap) {
        std::vector<std::int64_t> order(static_cast<std::size_t>(idx.size(0)));
        std::iota(order.begin(), order.end(), 0);
        Rng rng = make_rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(static_cast<std::size_t>(cap));
        std::sort(order.begin(), order.end());
        idx = idx.index_select(0, torch::tensor(order, torch::kLong));
    }
    auto x = rows.index_select(0, idx).to(torch::kFloat64);
    auto y = torch::one_hot(flat.index_select(0, idx), 2).to(torch::kFloat64);
    return {x, y};
}

}  // namespace fwseg
