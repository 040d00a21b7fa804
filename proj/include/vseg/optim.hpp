#pragma once

#include <cstdint>
#include <vector>

#include "vseg/vnet.hpp"

namespace vseg {

struct AmsGradParams {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

// Per-parameter moment buffers, aligned with NetworkParametersT order.
// v_hat is the running elementwise max of v, which is what makes the
// effective step size non-increasing (plain Adam lets it grow back).
template <class S>
struct OptimizerStateT {
    std::vector<std::vector<S>> m;
    std::vector<std::vector<S>> v;
    std::vector<std::vector<S>> v_hat;
    std::int64_t step_count = 0;
};

using OptimizerState = OptimizerStateT<float>;

template <class S>
OptimizerStateT<S> make_optimizer_state(const NetworkParametersT<S>& params);

// One update over every parameter. Rejects non-finite gradients (throws,
// naming the parameter) before touching any state, so a poisoned batch can
// never corrupt the moments. Gradients are zeroed after the update.
template <class S>
void optimizer_step(NetworkParametersT<S>& params, OptimizerStateT<S>& state,
                    const AmsGradParams& hp);

template <class S>
void zero_grads(NetworkParametersT<S>& params);

extern template struct OptimizerStateT<float>;
extern template struct OptimizerStateT<double>;

}  // namespace vseg
