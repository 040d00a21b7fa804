#include "vseg/losses.hpp"

#include <stdexcept>
#include <string>

#include "vseg/ops.hpp"

namespace vseg {

void TverskyParams::validate() const {
    if (alpha < 0 || beta < 0)
        throw std::invalid_argument("tversky: alpha and beta must be non-negative");
    if (alpha + beta <= 0)
        throw std::invalid_argument("tversky: alpha + beta must be positive");
    // epsilon = 0 is allowed for exact-identity checks; the caller then owns
    // the empty-denominator case.
    if (epsilon < 0)
        throw std::invalid_argument("tversky: epsilon must be non-negative");
}

namespace {

template <class S>
void check_pair(const TensorT<S>& pred, const TensorT<S>& truth) {
    if (!pred.defined() || !truth.defined())
        throw std::invalid_argument("tversky: undefined tensor");
    if (pred.shape() != truth.shape())
        throw std::invalid_argument("tversky: shape mismatch " + shape_to_string(pred.shape()) +
                                    " vs " + shape_to_string(truth.shape()));
}

}  // namespace

template <class S>
TensorT<S> tversky_index(const TensorT<S>& pred, const TensorT<S>& truth,
                         const TverskyParams& params) {
    check_pair(pred, truth);
    params.validate();
    const S eps = static_cast<S>(params.epsilon);
    auto tp = sum(mul(pred, truth));
    auto fn = sum(mul(rsub_scalar(S(1), pred), truth));
    auto fp = sum(mul(pred, rsub_scalar(S(1), truth)));
    auto den = add(tp, add(mul_scalar(fn, static_cast<S>(params.alpha)),
                           mul_scalar(fp, static_cast<S>(params.beta))));
    return div(add_scalar(tp, eps), add_scalar(den, eps));
}

template <class S>
TensorT<S> tversky_loss(const TensorT<S>& pred, const TensorT<S>& truth,
                        const TverskyParams& params) {
    return rsub_scalar(S(1), tversky_index(pred, truth, params));
}

template <class S>
TensorT<S> tversky_loss_batch(const TensorT<S>& pred, const TensorT<S>& truth,
                              const TverskyParams& params) {
    check_pair(pred, truth);
    params.validate();
    if (pred.shape().size() < 2)
        throw std::invalid_argument("tversky_loss_batch: need a batch axis, got shape " +
                                    shape_to_string(pred.shape()));
    const S eps = static_cast<S>(params.epsilon);
    auto tp = sum_per_sample(mul(pred, truth));
    auto fn = sum_per_sample(mul(rsub_scalar(S(1), pred), truth));
    auto fp = sum_per_sample(mul(pred, rsub_scalar(S(1), truth)));
    auto den = add(tp, add(mul_scalar(fn, static_cast<S>(params.alpha)),
                           mul_scalar(fp, static_cast<S>(params.beta))));
    auto index = div(add_scalar(tp, eps), add_scalar(den, eps));
    return mean(rsub_scalar(S(1), index));
}

#define VSEG_INSTANTIATE_LOSSES(S)                                                      \
    template TensorT<S> tversky_index(const TensorT<S>&, const TensorT<S>&,             \
                                      const TverskyParams&);                            \
    template TensorT<S> tversky_loss(const TensorT<S>&, const TensorT<S>&,              \
                                     const TverskyParams&);                             \
    template TensorT<S> tversky_loss_batch(const TensorT<S>&, const TensorT<S>&,        \
                                           const TverskyParams&);

VSEG_INSTANTIATE_LOSSES(float)
VSEG_INSTANTIATE_LOSSES(double)

#undef VSEG_INSTANTIATE_LOSSES

}  // namespace vseg
