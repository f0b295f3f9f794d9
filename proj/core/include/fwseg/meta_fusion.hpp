#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace fwseg {

/// average over shots and pixels of f_sup * f_m; [k,C,H,W] x2 -> [C].
torch::Tensor fuse_support(const torch::Tensor& f_sup, const torch::Tensor& f_m);

/// Tiles the guidance vector and concatenates it after the query channels:
/// [n,C,H,W], [C] -> [n,2C,H,W].
torch::Tensor fuse_query(const torch::Tensor& f_qry, const torch::Tensor& guidance);

/// Per-class linear classifier over pixel embeddings (float64).
struct LinearHeadSolution {
    torch::Tensor weights;  // [C,2]
    torch::Tensor bias;     // [2]
    double lambda = 0.0;
};

enum class RidgeForm {
    Auto,      // Woodbury when N <= C, primal otherwise
    Woodbury,  // X^T (X X^T + lambda I_N)^-1 Y
    Primal,    // (X^T X + lambda I_C)^-1 X^T Y
};

inline constexpr double kRidgeLambdaFloor = 1e-6;

/// Ridge regression onto one-hot labels. X [N,C], Y [N,2]. Differentiable in X.
LinearHeadSolution r2d2_solve(const torch::Tensor& x, const torch::Tensor& y, double lambda,
                              RidgeForm form = RidgeForm::Auto);

/// Optional record of the dual iterates of metaoptnet_solve.
struct SvmTrace {
    std::vector<double> objective;  // dual objective after each iteration (index 0 = start)
    torch::Tensor alpha;            // final dual variables [N]
};

/// Linear SVM without intercept solved in the dual by `iters` unrolled steps of
/// projected gradient ascent on alpha in [0, c_svm]^N, with a step of 1/L for
/// an upper bound L of the Hessian norm. Weights are +-w/2 for the two classes.
/// Throws MissingClassError when Y holds a single class.
LinearHeadSolution metaoptnet_solve(const torch::Tensor& x, const torch::Tensor& y, double c_svm, int iters,
                                    SvmTrace* trace = nullptr);

/// [n,C,H,W] -> [n,2,H,W] logits f W + b.
torch::Tensor linear_head_logits(const torch::Tensor& features, const LinearHeadSolution& sol);

/// Rows of labeled pixels: X [N,C] (float64) and one-hot Y [N,2]. When more
/// than `cap` pixels are labeled a seeded subset of `cap` rows is kept.
std::pair<torch::Tensor, torch::Tensor> labeled_rows(const torch::Tensor& embeddings, const torch::Tensor& codes,
                                                     int cap, std::uint64_t seed);

}  // namespace fwseg
