#pragma once

#include "vseg/rng.hpp"
#include "vseg/tensor.hpp"

namespace vseg {

// SeLU constants; the self-normalizing property depends on these exact values
// so they are not configurable.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

// ---------------------------------------------------------------------------
// Elementwise / structural ops (all differentiable)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b);

template <class S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b);

template <class S>
TensorT<S> div(const TensorT<S>& a, const TensorT<S>& b);

template <class S>
TensorT<S> add_scalar(const TensorT<S>& x, S c);

template <class S>
TensorT<S> mul_scalar(const TensorT<S>& x, S c);

// c - x
template <class S>
TensorT<S> rsub_scalar(S c, const TensorT<S>& x);

template <class S>
TensorT<S> sum(const TensorT<S>& x);

// Sums every axis but the first: [N, ...] -> [N].
template <class S>
TensorT<S> sum_per_sample(const TensorT<S>& x);

template <class S>
TensorT<S> mean(const TensorT<S>& x);

// Concatenates along axis 1 of [N, C, ...] tensors; backward splits the
// gradient along the channel axis.
template <class S>
TensorT<S> concat_channels(const TensorT<S>& a, const TensorT<S>& b);

// ---------------------------------------------------------------------------
// Activations / regularization
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> selu(const TensorT<S>& x);

template <class S>
TensorT<S> sigmoid(const TensorT<S>& x);

// Inverted dropout: survivors scaled by 1/(1-rate) at training time so the
// inference path is the exact identity. The mask is recorded for backward.
template <class S>
TensorT<S> dropout(const TensorT<S>& x, double rate, bool training, Rng& rng);

// ---------------------------------------------------------------------------
// Convolutions (cross-correlation semantics, no kernel flip)
// ---------------------------------------------------------------------------

// input [N,C,D,H,W], kernel [K,C,kd,kh,kw], bias [K].
// Output extent: floor((D + 2*padding - kd)/stride) + 1, same for H and W.
template <class S>
TensorT<S> conv3d(const TensorT<S>& input, const TensorT<S>& kernel,
                  const TensorT<S>& bias, std::int64_t stride, std::int64_t padding);

// Non-overlapping upsampling: kernel [C,K,s,s,s] with extent == stride,
// input [N,C,D,H,W] -> output [N,K,D*s,H*s,W*s].
template <class S>
TensorT<S> conv3d_transposed(const TensorT<S>& input, const TensorT<S>& kernel,
                             std::int64_t stride);

}  // namespace vseg
