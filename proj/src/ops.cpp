#include "vseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vseg {

namespace {

template <class S>
using Node = detail::TensorNode<S>;

// Builds an op node. The graph is recorded only while grads can flow; with no
// differentiable parent (or inside GradPause) the result is a plain tensor.
template <class S>
TensorT<S> make_op(Shape shape, std::vector<S> values,
                   std::initializer_list<TensorT<S>> parents,
                   std::function<void(Node<S>&)> backward_fn) {
    bool needs_grad = false;
    if (GradPause::recording()) {
        for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
    }
    TensorT<S> out = TensorT<S>::from_values(std::move(shape), std::move(values), false);
    if (needs_grad) {
        auto node = out.node();
        node->requires_grad = true;
        for (const auto& p : parents) node->parents.push_back(p.node());
        node->backward_fn = std::move(backward_fn);
    }
    return out;
}

template <class S>
void check_defined(const TensorT<S>& t, const char* what) {
    if (!t.defined()) throw std::invalid_argument(std::string(what) + " is undefined");
}

template <class S>
void check_same_shape(const TensorT<S>& a, const TensorT<S>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()));
    }
}

// Adds src into dst->grad if dst participates in the sweep.
template <class S>
void accumulate(const std::shared_ptr<Node<S>>& dst, const std::vector<S>& src) {
    if (!dst->requires_grad) return;
    dst->ensure_grad();
    S* g = dst->grad.data();
    const S* s = src.data();
    for (std::size_t i = 0; i < src.size(); ++i) g[i] += s[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    check_defined(a, "add lhs");
    check_defined(b, "add rhs");
    check_same_shape(a, b, "add");
    std::vector<S> out(a.values().size());
    const S* pa = a.values().data();
    const S* pb = b.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
    auto an = a.node();
    auto bn = b.node();
    return make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](Node<S>& n) {
        accumulate(an, n.grad);
        accumulate(bn, n.grad);
    });
}

template <class S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    check_defined(a, "mul lhs");
    check_defined(b, "mul rhs");
    check_same_shape(a, b, "mul");
    std::vector<S> out(a.values().size());
    const S* pa = a.values().data();
    const S* pb = b.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
    auto an = a.node();
    auto bn = b.node();
    return make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](Node<S>& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                an->grad[i] += n.grad[i] * bn->values[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                bn->grad[i] += n.grad[i] * an->values[i];
        }
    });
}

template <class S>
TensorT<S> div(const TensorT<S>& a, const TensorT<S>& b) {
    check_defined(a, "div lhs");
    check_defined(b, "div rhs");
    check_same_shape(a, b, "div");
    std::vector<S> out(a.values().size());
    const S* pa = a.values().data();
    const S* pb = b.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] / pb[i];
    auto an = a.node();
    auto bn = b.node();
    return make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](Node<S>& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                an->grad[i] += n.grad[i] / bn->values[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                const S bv = bn->values[i];
                bn->grad[i] -= n.grad[i] * an->values[i] / (bv * bv);
            }
        }
    });
}

template <class S>
TensorT<S> add_scalar(const TensorT<S>& x, S c) {
    check_defined(x, "add_scalar input");
    std::vector<S> out(x.values());
    for (S& v : out) v += c;
    auto xn = x.node();
    return make_op<S>(x.shape(), std::move(out), {x},
                      [xn](Node<S>& n) { accumulate(xn, n.grad); });
}

template <class S>
TensorT<S> mul_scalar(const TensorT<S>& x, S c) {
    check_defined(x, "mul_scalar input");
    std::vector<S> out(x.values());
    for (S& v : out) v *= c;
    auto xn = x.node();
    return make_op<S>(x.shape(), std::move(out), {x}, [xn, c](Node<S>& n) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) xn->grad[i] += n.grad[i] * c;
    });
}

template <class S>
TensorT<S> rsub_scalar(S c, const TensorT<S>& x) {
    check_defined(x, "rsub_scalar input");
    std::vector<S> out(x.values().size());
    const S* px = x.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c - px[i];
    auto xn = x.node();
    return make_op<S>(x.shape(), std::move(out), {x}, [xn](Node<S>& n) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) xn->grad[i] -= n.grad[i];
    });
}

template <class S>
TensorT<S> sum(const TensorT<S>& x) {
    check_defined(x, "sum input");
    S acc = 0;
    const S* px = x.values().data();
    const std::size_t count = x.values().size();
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < count; ++i) acc += px[i];
    auto xn = x.node();
    return make_op<S>({1}, {acc}, {x}, [xn](Node<S>& n) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const S g = n.grad[0];
        for (auto& gx : xn->grad) gx += g;
    });
}

template <class S>
TensorT<S> sum_per_sample(const TensorT<S>& x) {
    check_defined(x, "sum_per_sample input");
    if (x.shape().empty()) throw std::invalid_argument("sum_per_sample: rank-0 tensor");
    const std::int64_t n_samples = x.shape()[0];
    const std::int64_t per = x.numel() / n_samples;
    std::vector<S> out(static_cast<std::size_t>(n_samples), S(0));
    const S* px = x.values().data();
    for (std::int64_t s = 0; s < n_samples; ++s) {
        S acc = 0;
        const S* row = px + s * per;
#pragma omp simd reduction(+ : acc)
        for (std::int64_t i = 0; i < per; ++i) acc += row[i];
        out[static_cast<std::size_t>(s)] = acc;
    }
    auto xn = x.node();
    return make_op<S>({n_samples}, std::move(out), {x}, [xn, n_samples, per](Node<S>& n) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::int64_t s = 0; s < n_samples; ++s) {
            const S g = n.grad[static_cast<std::size_t>(s)];
            S* row = xn->grad.data() + s * per;
            for (std::int64_t i = 0; i < per; ++i) row[i] += g;
        }
    });
}

template <class S>
TensorT<S> mean(const TensorT<S>& x) {
    check_defined(x, "mean input");
    return mul_scalar(sum(x), S(1) / static_cast<S>(x.numel()));
}

template <class S>
TensorT<S> concat_channels(const TensorT<S>& a, const TensorT<S>& b) {
    check_defined(a, "concat lhs");
    check_defined(b, "concat rhs");
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != sb.size() || sa.size() < 2)
        throw std::invalid_argument("concat_channels: need equal-rank tensors of rank >= 2, got " +
                                    shape_to_string(sa) + " vs " + shape_to_string(sb));
    for (std::size_t i = 0; i < sa.size(); ++i) {
        if (i != 1 && sa[i] != sb[i])
            throw std::invalid_argument("concat_channels: shapes differ outside the channel axis: " +
                                        shape_to_string(sa) + " vs " + shape_to_string(sb));
    }
    const std::int64_t n = sa[0];
    const std::int64_t ca = sa[1];
    const std::int64_t cb = sb[1];
    std::int64_t spatial = 1;
    for (std::size_t i = 2; i < sa.size(); ++i) spatial *= sa[i];

    Shape out_shape = sa;
    out_shape[1] = ca + cb;
    std::vector<S> out(static_cast<std::size_t>(n * (ca + cb) * spatial));
    const std::int64_t block_a = ca * spatial;
    const std::int64_t block_b = cb * spatial;
    for (std::int64_t i = 0; i < n; ++i) {
        std::copy_n(a.values().data() + i * block_a, block_a,
                    out.data() + i * (block_a + block_b));
        std::copy_n(b.values().data() + i * block_b, block_b,
                    out.data() + i * (block_a + block_b) + block_a);
    }
    auto an = a.node();
    auto bn = b.node();
    return make_op<S>(std::move(out_shape), std::move(out), {a, b},
                      [an, bn, n, block_a, block_b](Node<S>& nd) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) {
                const S* g = nd.grad.data() + i * (block_a + block_b);
                S* ga = an->grad.data() + i * block_a;
                for (std::int64_t j = 0; j < block_a; ++j) ga[j] += g[j];
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) {
                const S* g = nd.grad.data() + i * (block_a + block_b) + block_a;
                S* gb = bn->grad.data() + i * block_b;
                for (std::int64_t j = 0; j < block_b; ++j) gb[j] += g[j];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> selu(const TensorT<S>& x) {
    check_defined(x, "selu input");
    const S lambda = static_cast<S>(kSeluLambda);
    const S alpha = static_cast<S>(kSeluAlpha);
    const S la = lambda * alpha;
    std::vector<S> out(x.values().size());
    const S* px = x.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const S v = px[i];
        out[i] = v > S(0) ? lambda * v : la * (std::exp(v) - S(1));
    }
    auto xn = x.node();
    // y alone recovers the derivative: lambda on the positive branch,
    // la*exp(x) == y + la on the other.
    return make_op<S>(x.shape(), std::move(out), {x}, [xn, lambda, la](Node<S>& n) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const S* yv = n.values.data();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const S d = yv[i] > S(0) ? lambda : yv[i] + la;
            xn->grad[i] += n.grad[i] * d;
        }
    });
}

template <class S>
TensorT<S> sigmoid(const TensorT<S>& x) {
    check_defined(x, "sigmoid input");
    std::vector<S> out(x.values().size());
    const S* px = x.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const S v = px[i];
        // two-branch form: never exponentiates a positive argument
        if (v >= S(0)) {
            out[i] = S(1) / (S(1) + std::exp(-v));
        } else {
            const S e = std::exp(v);
            out[i] = e / (S(1) + e);
        }
    }
    auto xn = x.node();
    return make_op<S>(x.shape(), std::move(out), {x}, [xn](Node<S>& n) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const S* yv = n.values.data();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            xn->grad[i] += n.grad[i] * yv[i] * (S(1) - yv[i]);
    });
}

template <class S>
TensorT<S> dropout(const TensorT<S>& x, double rate, bool training, Rng& rng) {
    check_defined(x, "dropout input");
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return x;  // exact identity

    const S scale = static_cast<S>(1.0 / (1.0 - rate));
    std::vector<S> out(x.values().size());
    std::vector<std::uint8_t> mask(x.values().size());
    const S* px = x.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const bool keep = rng.uniform() >= rate;
        mask[i] = keep ? 1 : 0;
        out[i] = keep ? px[i] * scale : S(0);
    }
    auto xn = x.node();
    return make_op<S>(x.shape(), std::move(out), {x},
                      [xn, scale, m = std::move(mask)](Node<S>& n) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (m[i]) xn->grad[i] += n.grad[i] * scale;
    });
}

// ---------------------------------------------------------------------------
// conv3d
// ---------------------------------------------------------------------------

namespace {

struct ConvDims {
    std::int64_t n, c, d, h, w;       // input
    std::int64_t k, kd, kh, kw;       // kernel
    std::int64_t od, oh, ow;          // output
    std::int64_t stride, padding;
};

template <class S>
ConvDims conv_check(const TensorT<S>& input, const TensorT<S>& kernel,
                    const TensorT<S>& bias, std::int64_t stride, std::int64_t padding) {
    if (input.shape().size() != 5)
        throw std::invalid_argument("conv3d: input must be [N,C,D,H,W], got " +
                                    shape_to_string(input.shape()));
    if (kernel.shape().size() != 5)
        throw std::invalid_argument("conv3d: kernel must be [K,C,kd,kh,kw], got " +
                                    shape_to_string(kernel.shape()));
    if (stride < 1) throw std::invalid_argument("conv3d: stride must be positive");
    if (padding < 0) throw std::invalid_argument("conv3d: padding must be non-negative");

    ConvDims cd{};
    cd.n = input.dim(0); cd.c = input.dim(1);
    cd.d = input.dim(2); cd.h = input.dim(3); cd.w = input.dim(4);
    cd.k = kernel.dim(0);
    cd.kd = kernel.dim(2); cd.kh = kernel.dim(3); cd.kw = kernel.dim(4);
    cd.stride = stride; cd.padding = padding;

    if (kernel.dim(1) != cd.c)
        throw std::invalid_argument("conv3d: channel count disagreement, input " +
                                    shape_to_string(input.shape()) + " vs kernel " +
                                    shape_to_string(kernel.shape()));
    if (bias.shape().size() != 1 || bias.dim(0) != cd.k)
        throw std::invalid_argument("conv3d: bias must be [K] with K=" + std::to_string(cd.k) +
                                    ", got " + shape_to_string(bias.shape()));
    if (cd.kd > cd.d + 2 * padding || cd.kh > cd.h + 2 * padding || cd.kw > cd.w + 2 * padding)
        throw std::invalid_argument("conv3d: kernel " + shape_to_string(kernel.shape()) +
                                    " exceeds padded input " + shape_to_string(input.shape()) +
                                    " with padding " + std::to_string(padding));
    cd.od = (cd.d + 2 * padding - cd.kd) / stride + 1;
    cd.oh = (cd.h + 2 * padding - cd.kh) / stride + 1;
    cd.ow = (cd.w + 2 * padding - cd.kw) / stride + 1;
    return cd;
}

// First output column past the valid range for a tap starting at iw0. The
// numerator goes negative when the tap starts beyond the row, and plain
// division would round that toward zero instead of clamping it out.
inline std::int64_t row_hi(std::int64_t iw0, std::int64_t w, std::int64_t stride,
                           std::int64_t ow) {
    if (iw0 + (ow - 1) * stride < w) return ow;
    const std::int64_t last = w - 1 - iw0;
    return last < 0 ? 0 : last / stride + 1;
}

// out[n,k] += sum_c cross-correlation; each output row is owned by exactly one
// iteration so the result is bit-stable for any parallel split.
template <class S>
void conv_forward_kernel(const ConvDims& cd, const S* in, const S* ker, const S* bias, S* out) {
    const std::int64_t in_sl = cd.h * cd.w;
    const std::int64_t out_sl = cd.oh * cd.ow;
    for (std::int64_t n = 0; n < cd.n; ++n) {
        for (std::int64_t k = 0; k < cd.k; ++k) {
            S* out_nk = out + ((n * cd.k + k) * cd.od) * out_sl;
            const S bv = bias[k];
            std::fill(out_nk, out_nk + cd.od * out_sl, bv);
            for (std::int64_t c = 0; c < cd.c; ++c) {
                const S* in_nc = in + ((n * cd.c + c) * cd.d) * in_sl;
                const S* ker_kc = ker + ((k * cd.c + c) * cd.kd) * cd.kh * cd.kw;
                for (std::int64_t od = 0; od < cd.od; ++od) {
                    const std::int64_t id0 = od * cd.stride - cd.padding;
                    for (std::int64_t kd = 0; kd < cd.kd; ++kd) {
                        const std::int64_t id = id0 + kd;
                        if (id < 0 || id >= cd.d) continue;
                        for (std::int64_t oh = 0; oh < cd.oh; ++oh) {
                            const std::int64_t ih0 = oh * cd.stride - cd.padding;
                            S* orow = out_nk + od * out_sl + oh * cd.ow;
                            for (std::int64_t kh = 0; kh < cd.kh; ++kh) {
                                const std::int64_t ih = ih0 + kh;
                                if (ih < 0 || ih >= cd.h) continue;
                                const S* irow = in_nc + id * in_sl + ih * cd.w;
                                const S* krow = ker_kc + (kd * cd.kh + kh) * cd.kw;
                                for (std::int64_t kw = 0; kw < cd.kw; ++kw) {
                                    const S wv = krow[kw];
                                    const std::int64_t iw0 = kw - cd.padding;
                                    // valid ow range: 0 <= iw0 + ow*stride < w
                                    std::int64_t lo = 0;
                                    if (iw0 < 0) lo = (-iw0 + cd.stride - 1) / cd.stride;
                                    const std::int64_t hi = row_hi(iw0, cd.w, cd.stride, cd.ow);
                                    const S* ip = irow + iw0;
                                    if (cd.stride == 1) {
                                        for (std::int64_t ow = lo; ow < hi; ++ow)
                                            orow[ow] += wv * ip[ow];
                                    } else {
                                        for (std::int64_t ow = lo; ow < hi; ++ow)
                                            orow[ow] += wv * ip[ow * cd.stride];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

template <class S>
void conv_backward_input(const ConvDims& cd, const S* ker, const S* gout, S* gin) {
    const std::int64_t in_sl = cd.h * cd.w;
    const std::int64_t out_sl = cd.oh * cd.ow;
    for (std::int64_t n = 0; n < cd.n; ++n) {
        for (std::int64_t c = 0; c < cd.c; ++c) {
            S* gin_nc = gin + ((n * cd.c + c) * cd.d) * in_sl;
            for (std::int64_t k = 0; k < cd.k; ++k) {
                const S* gout_nk = gout + ((n * cd.k + k) * cd.od) * out_sl;
                const S* ker_kc = ker + ((k * cd.c + c) * cd.kd) * cd.kh * cd.kw;
                for (std::int64_t od = 0; od < cd.od; ++od) {
                    const std::int64_t id0 = od * cd.stride - cd.padding;
                    for (std::int64_t kd = 0; kd < cd.kd; ++kd) {
                        const std::int64_t id = id0 + kd;
                        if (id < 0 || id >= cd.d) continue;
                        for (std::int64_t oh = 0; oh < cd.oh; ++oh) {
                            const std::int64_t ih0 = oh * cd.stride - cd.padding;
                            const S* grow = gout_nk + od * out_sl + oh * cd.ow;
                            for (std::int64_t kh = 0; kh < cd.kh; ++kh) {
                                const std::int64_t ih = ih0 + kh;
                                if (ih < 0 || ih >= cd.h) continue;
                                S* gin_row = gin_nc + id * in_sl + ih * cd.w;
                                const S* krow = ker_kc + (kd * cd.kh + kh) * cd.kw;
                                for (std::int64_t kw = 0; kw < cd.kw; ++kw) {
                                    const S wv = krow[kw];
                                    const std::int64_t iw0 = kw - cd.padding;
                                    std::int64_t lo = 0;
                                    if (iw0 < 0) lo = (-iw0 + cd.stride - 1) / cd.stride;
                                    const std::int64_t hi = row_hi(iw0, cd.w, cd.stride, cd.ow);
                                    S* gp = gin_row + iw0;
                                    if (cd.stride == 1) {
                                        for (std::int64_t ow = lo; ow < hi; ++ow)
                                            gp[ow] += wv * grow[ow];
                                    } else {
                                        for (std::int64_t ow = lo; ow < hi; ++ow)
                                            gp[ow * cd.stride] += wv * grow[ow];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

template <class S>
void conv_backward_kernel_bias(const ConvDims& cd, const S* in, const S* gout,
                               S* gker, S* gbias) {
    const std::int64_t in_sl = cd.h * cd.w;
    const std::int64_t out_sl = cd.oh * cd.ow;
    for (std::int64_t k = 0; k < cd.k; ++k) {
        S bacc = 0;
        for (std::int64_t n = 0; n < cd.n; ++n) {
            const S* gout_nk = gout + ((n * cd.k + k) * cd.od) * out_sl;
            const std::int64_t count = cd.od * out_sl;
#pragma omp simd reduction(+ : bacc)
            for (std::int64_t i = 0; i < count; ++i) bacc += gout_nk[i];
        }
        gbias[k] += bacc;

        for (std::int64_t c = 0; c < cd.c; ++c) {
            S* gker_kc = gker + ((k * cd.c + c) * cd.kd) * cd.kh * cd.kw;
            for (std::int64_t kd = 0; kd < cd.kd; ++kd) {
                for (std::int64_t kh = 0; kh < cd.kh; ++kh) {
                    for (std::int64_t kw = 0; kw < cd.kw; ++kw) {
                        S acc = 0;
                        const std::int64_t iw0 = kw - cd.padding;
                        std::int64_t lo = 0;
                        if (iw0 < 0) lo = (-iw0 + cd.stride - 1) / cd.stride;
                        const std::int64_t hi = row_hi(iw0, cd.w, cd.stride, cd.ow);
                        for (std::int64_t n = 0; n < cd.n; ++n) {
                            const S* in_nc = in + ((n * cd.c + c) * cd.d) * in_sl;
                            const S* gout_nk = gout + ((n * cd.k + k) * cd.od) * out_sl;
                            for (std::int64_t od = 0; od < cd.od; ++od) {
                                const std::int64_t id = od * cd.stride - cd.padding + kd;
                                if (id < 0 || id >= cd.d) continue;
                                for (std::int64_t oh = 0; oh < cd.oh; ++oh) {
                                    const std::int64_t ih = oh * cd.stride - cd.padding + kh;
                                    if (ih < 0 || ih >= cd.h) continue;
                                    const S* irow = in_nc + id * in_sl + ih * cd.w + iw0;
                                    const S* grow = gout_nk + od * out_sl + oh * cd.ow;
                                    if (cd.stride == 1) {
#pragma omp simd reduction(+ : acc)
                                        for (std::int64_t ow = lo; ow < hi; ++ow)
                                            acc += grow[ow] * irow[ow];
                                    } else {
                                        for (std::int64_t ow = lo; ow < hi; ++ow)
                                            acc += grow[ow] * irow[ow * cd.stride];
                                    }
                                }
                            }
                        }
                        gker_kc[(kd * cd.kh + kh) * cd.kw + kw] += acc;
                    }
                }
            }
        }
    }
}

}  // namespace

template <class S>
TensorT<S> conv3d(const TensorT<S>& input, const TensorT<S>& kernel,
                  const TensorT<S>& bias, std::int64_t stride, std::int64_t padding) {
    check_defined(input, "conv3d input");
    check_defined(kernel, "conv3d kernel");
    check_defined(bias, "conv3d bias");
    const ConvDims cd = conv_check(input, kernel, bias, stride, padding);

    std::vector<S> out(static_cast<std::size_t>(cd.n * cd.k * cd.od * cd.oh * cd.ow));
    conv_forward_kernel(cd, input.values().data(), kernel.values().data(),
                        bias.values().data(), out.data());

    auto in_n = input.node();
    auto ker_n = kernel.node();
    auto bias_n = bias.node();
    return make_op<S>({cd.n, cd.k, cd.od, cd.oh, cd.ow}, std::move(out),
                      {input, kernel, bias}, [in_n, ker_n, bias_n, cd](Node<S>& n) {
        if (in_n->requires_grad) {
            in_n->ensure_grad();
            conv_backward_input(cd, ker_n->values.data(), n.grad.data(), in_n->grad.data());
        }
        if (ker_n->requires_grad || bias_n->requires_grad) {
            ker_n->ensure_grad();
            bias_n->ensure_grad();
            conv_backward_kernel_bias(cd, in_n->values.data(), n.grad.data(),
                                      ker_n->grad.data(), bias_n->grad.data());
        }
    });
}

// ---------------------------------------------------------------------------
// conv3d_transposed
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> conv3d_transposed(const TensorT<S>& input, const TensorT<S>& kernel,
                             std::int64_t stride) {
    check_defined(input, "conv3d_transposed input");
    check_defined(kernel, "conv3d_transposed kernel");
    if (input.shape().size() != 5)
        throw std::invalid_argument("conv3d_transposed: input must be [N,C,D,H,W], got " +
                                    shape_to_string(input.shape()));
    if (kernel.shape().size() != 5)
        throw std::invalid_argument("conv3d_transposed: kernel must be [C,K,kd,kh,kw], got " +
                                    shape_to_string(kernel.shape()));
    if (stride < 1) throw std::invalid_argument("conv3d_transposed: stride must be positive");
    if (kernel.dim(2) != stride || kernel.dim(3) != stride || kernel.dim(4) != stride)
        throw std::invalid_argument("conv3d_transposed: kernel extent " +
                                    shape_to_string(kernel.shape()) + " must equal stride " +
                                    std::to_string(stride));
    if (kernel.dim(0) != input.dim(1))
        throw std::invalid_argument("conv3d_transposed: channel count disagreement, input " +
                                    shape_to_string(input.shape()) + " vs kernel " +
                                    shape_to_string(kernel.shape()));

    const std::int64_t N = input.dim(0), C = input.dim(1);
    const std::int64_t D = input.dim(2), H = input.dim(3), W = input.dim(4);
    const std::int64_t K = kernel.dim(1);
    const std::int64_t s = stride;
    const std::int64_t OD = D * s, OH = H * s, OW = W * s;

    // Kernel extent == stride, so every output voxel receives exactly one
    // contribution per input channel: a gather, not a racey scatter.
    std::vector<S> out(static_cast<std::size_t>(N * K * OD * OH * OW), S(0));
    const S* in = input.values().data();
    const S* ker = kernel.values().data();
    const std::int64_t s3 = s * s * s;
    for (std::int64_t n = 0; n < N; ++n) {
        for (std::int64_t k = 0; k < K; ++k) {
            S* out_nk = out.data() + ((n * K + k) * OD) * OH * OW;
            for (std::int64_t c = 0; c < C; ++c) {
                const S* in_nc = in + ((n * C + c) * D) * H * W;
                const S* ker_ck = ker + (c * K + k) * s3;
                for (std::int64_t id = 0; id < D; ++id) {
                    for (std::int64_t a = 0; a < s; ++a) {
                        for (std::int64_t ih = 0; ih < H; ++ih) {
                            const S* irow = in_nc + (id * H + ih) * W;
                            for (std::int64_t b = 0; b < s; ++b) {
                                S* orow = out_nk + (((id * s + a) * OH) + ih * s + b) * OW;
                                for (std::int64_t cw = 0; cw < s; ++cw) {
                                    const S wv = ker_ck[(a * s + b) * s + cw];
                                    for (std::int64_t iw = 0; iw < W; ++iw)
                                        orow[iw * s + cw] += wv * irow[iw];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    auto in_n = input.node();
    auto ker_n = kernel.node();
    return make_op<S>({N, K, OD, OH, OW}, std::move(out), {input, kernel},
                      [in_n, ker_n, N, C, D, H, W, K, s, s3](Node<S>& nd) {
        const std::int64_t OH2 = H * s, OW2 = W * s;
        if (in_n->requires_grad) {
            in_n->ensure_grad();
            for (std::int64_t n = 0; n < N; ++n) {
                for (std::int64_t c = 0; c < C; ++c) {
                    S* gin_nc = in_n->grad.data() + ((n * C + c) * D) * H * W;
                    for (std::int64_t k = 0; k < K; ++k) {
                        const S* g_nk = nd.grad.data() + ((n * K + k) * D * s) * OH2 * OW2;
                        const S* ker_ck = ker_n->values.data() + (c * K + k) * s3;
                        for (std::int64_t id = 0; id < D; ++id) {
                            for (std::int64_t a = 0; a < s; ++a) {
                                for (std::int64_t ih = 0; ih < H; ++ih) {
                                    S* grow_in = gin_nc + (id * H + ih) * W;
                                    for (std::int64_t b = 0; b < s; ++b) {
                                        const S* grow = g_nk + (((id * s + a) * OH2) + ih * s + b) * OW2;
                                        for (std::int64_t cw = 0; cw < s; ++cw) {
                                            const S wv = ker_ck[(a * s + b) * s + cw];
                                            for (std::int64_t iw = 0; iw < W; ++iw)
                                                grow_in[iw] += wv * grow[iw * s + cw];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if (ker_n->requires_grad) {
            ker_n->ensure_grad();
            for (std::int64_t c = 0; c < C; ++c) {
                for (std::int64_t k = 0; k < K; ++k) {
                    S* gk = ker_n->grad.data() + (c * K + k) * s3;
                    for (std::int64_t n = 0; n < N; ++n) {
                        const S* in_nc = in_n->values.data() + ((n * C + c) * D) * H * W;
                        const S* g_nk = nd.grad.data() + ((n * K + k) * D * s) * OH2 * OW2;
                        for (std::int64_t id = 0; id < D; ++id) {
                            for (std::int64_t a = 0; a < s; ++a) {
                                for (std::int64_t ih = 0; ih < H; ++ih) {
                                    const S* irow = in_nc + (id * H + ih) * W;
                                    for (std::int64_t b = 0; b < s; ++b) {
                                        const S* grow = g_nk + (((id * s + a) * OH2) + ih * s + b) * OW2;
                                        for (std::int64_t cw = 0; cw < s; ++cw) {
                                            S acc = 0;
#pragma omp simd reduction(+ : acc)
                                            for (std::int64_t iw = 0; iw < W; ++iw)
                                                acc += irow[iw] * grow[iw * s + cw];
                                            gk[(a * s + b) * s + cw] += acc;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------

#define VSEG_INSTANTIATE_OPS(S)                                                          \
    template TensorT<S> add(const TensorT<S>&, const TensorT<S>&);                       \
    template TensorT<S> mul(const TensorT<S>&, const TensorT<S>&);                       \
    template TensorT<S> div(const TensorT<S>&, const TensorT<S>&);                       \
    template TensorT<S> add_scalar(const TensorT<S>&, S);                                \
    template TensorT<S> mul_scalar(const TensorT<S>&, S);                                \
    template TensorT<S> rsub_scalar(S, const TensorT<S>&);                               \
    template TensorT<S> sum(const TensorT<S>&);                                          \
    template TensorT<S> sum_per_sample(const TensorT<S>&);                               \
    template TensorT<S> mean(const TensorT<S>&);                                         \
    template TensorT<S> concat_channels(const TensorT<S>&, const TensorT<S>&);           \
    template TensorT<S> selu(const TensorT<S>&);                                         \
    template TensorT<S> sigmoid(const TensorT<S>&);                                      \
    template TensorT<S> dropout(const TensorT<S>&, double, bool, Rng&);                  \
    template TensorT<S> conv3d(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&,  \
                               std::int64_t, std::int64_t);                              \
    template TensorT<S> conv3d_transposed(const TensorT<S>&, const TensorT<S>&,          \
                                          std::int64_t);

VSEG_INSTANTIATE_OPS(float)
VSEG_INSTANTIATE_OPS(double)

#undef VSEG_INSTANTIATE_OPS

}  // namespace vseg
