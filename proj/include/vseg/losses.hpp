#pragma once

#include "vseg/tensor.hpp"

namespace vseg {

// Trade-off weights of the overlap index: alpha scales false negatives,
// beta scales false positives. epsilon keeps the empty-truth case defined.
struct TverskyParams {
    double alpha = 0.4;
    double beta = 0.6;
    double epsilon = 1e-6;

    void validate() const;
};

// T = (TP + eps) / (TP + alpha*FN + beta*FP + eps) over the whole tensor,
// with soft counts TP = sum p*g, FN = sum (1-p)*g, FP = sum p*(1-g).
// Differentiable w.r.t. pred.
template <class S>
TensorT<S> tversky_index(const TensorT<S>& pred, const TensorT<S>& truth,
                         const TverskyParams& params);

// 1 - tversky_index, whole tensor treated as one patch.
template <class S>
TensorT<S> tversky_loss(const TensorT<S>& pred, const TensorT<S>& truth,
                        const TverskyParams& params);

// Batched reduction: the index is computed per sample (axis 0), the loss is
// the mean of the per-sample losses.
template <class S>
TensorT<S> tversky_loss_batch(const TensorT<S>& pred, const TensorT<S>& truth,
                              const TverskyParams& params);

}  // namespace vseg
