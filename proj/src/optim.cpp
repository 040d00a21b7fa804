#include "vseg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace vseg {

void AmsGradParams::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("optimizer: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0)
        throw std::invalid_argument("optimizer: beta1 must be in [0,1)");
    if (beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("optimizer: beta2 must be in [0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer: epsilon must be positive");
}

template <class S>
OptimizerStateT<S> make_optimizer_state(const NetworkParametersT<S>& params) {
    OptimizerStateT<S> state;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    state.v_hat.reserve(params.size());
    for (const auto& p : params.items()) {
        const std::size_t n = p.tensor.values().size();
        state.m.emplace_back(n, S(0));
        state.v.emplace_back(n, S(0));
        state.v_hat.emplace_back(n, S(0));
    }
    return state;
}

template <class S>
void optimizer_step(NetworkParametersT<S>& params, OptimizerStateT<S>& state,
                    const AmsGradParams& hp) {
    hp.validate();
    if (state.m.size() != params.size())
        throw std::invalid_argument("optimizer: state does not match parameter list");

    for (const auto& p : params.items()) {
        if (!p.tensor.has_grad())
            throw std::invalid_argument("optimizer: parameter " + p.name + " has no gradient");
        for (S g : p.tensor.grad())
            if (!std::isfinite(static_cast<double>(g)))
                throw std::runtime_error("optimizer: non-finite gradient in " + p.name);
    }

    const std::int64_t t = ++state.step_count;
    const double bias1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& tensor = params.items()[i].tensor;
        std::vector<S>& theta = tensor.mutable_values();
        std::vector<S>& grad = tensor.mutable_grad();
        std::vector<S>& m = state.m[i];
        std::vector<S>& v = state.v[i];
        std::vector<S>& vh = state.v_hat[i];

        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double g = static_cast<double>(grad[j]);
            const double mj = hp.beta1 * static_cast<double>(m[j]) + (1.0 - hp.beta1) * g;
            const double vj = hp.beta2 * static_cast<double>(v[j]) + (1.0 - hp.beta2) * g * g;
            m[j] = static_cast<S>(mj);
            v[j] = static_cast<S>(vj);
            const double vhj = std::max(static_cast<double>(vh[j]), vj);
            vh[j] = static_cast<S>(vhj);
            const double m_hat = mj / bias1;
            theta[j] = static_cast<S>(static_cast<double>(theta[j]) -
                                      hp.lr * m_hat / (std::sqrt(vhj) + hp.epsilon));
            grad[j] = S(0);
        }
    }
}

template <class S>
void zero_grads(NetworkParametersT<S>& params) {
    for (auto& p : params.items()) p.tensor.zero_grad();
}

template struct OptimizerStateT<float>;
template struct OptimizerStateT<double>;

template OptimizerStateT<float> make_optimizer_state(const NetworkParametersT<float>&);
template OptimizerStateT<double> make_optimizer_state(const NetworkParametersT<double>&);
template void optimizer_step(NetworkParametersT<float>&, OptimizerStateT<float>&,
                             const AmsGradParams&);
template void optimizer_step(NetworkParametersT<double>&, OptimizerStateT<double>&,
                             const AmsGradParams&);
template void zero_grads(NetworkParametersT<float>&);
template void zero_grads(NetworkParametersT<double>&);

}  // namespace vseg
