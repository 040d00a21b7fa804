#include "vseg/vnet.hpp"

#include <cmath>
#include <stdexcept>

#include "vseg/ops.hpp"

namespace vseg {

void NetworkConfig::validate() const {
    if (stages < 1) throw std::invalid_argument("network config: stages must be >= 1");
    if (base_channels < 1)
        throw std::invalid_argument("network config: base_channels must be >= 1");
    if (convs_per_stage < 1)
        throw std::invalid_argument("network config: convs_per_stage must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("network config: kernel_size must be odd and positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("network config: dropout_rate must be in [0,1)");
    if (input_patch_size < 1)
        throw std::invalid_argument("network config: input_patch_size must be positive");
    const int div = 1 << stages;
    if (input_patch_size % div != 0)
        throw std::invalid_argument("network config: input_patch_size " +
                                    std::to_string(input_patch_size) +
                                    " not divisible by 2^stages = " + std::to_string(div));
}

template <class S>
void NetworkParametersT<S>::add(std::string name, TensorT<S> tensor) {
    params_.push_back({std::move(name), std::move(tensor)});
}

template <class S>
TensorT<S>& NetworkParametersT<S>::find(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return p.tensor;
    throw std::invalid_argument("unknown parameter: " + name);
}

template <class S>
const TensorT<S>& NetworkParametersT<S>::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return p.tensor;
    throw std::invalid_argument("unknown parameter: " + name);
}

template <class S>
std::int64_t NetworkParametersT<S>::total_parameter_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

template <class S>
bool NetworkParametersT<S>::all_finite() const {
    for (const auto& p : params_)
        for (S v : p.tensor.values())
            if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

namespace {

template <class S>
TensorT<S> init_kernel(Shape shape, std::int64_t fan_in, Rng& rng) {
    const double sd = std::sqrt(1.0 / static_cast<double>(fan_in));
    const std::int64_t n = shape_numel(shape);
    std::vector<S> values(static_cast<std::size_t>(n));
    for (auto& v : values) v = static_cast<S>(rng.normal(0.0, sd));
    return TensorT<S>::from_values(std::move(shape), std::move(values), true);
}

// conv kernel [K,C,k,k,k] + bias [K]
template <class S>
void add_conv(NetworkParametersT<S>& params, const std::string& prefix, std::int64_t c_in,
              std::int64_t c_out, std::int64_t k, Rng& rng) {
    params.add(prefix + ".kernel",
               init_kernel<S>({c_out, c_in, k, k, k}, c_in * k * k * k, rng));
    params.add(prefix + ".bias", TensorT<S>::zeros({c_out}, true));
}

// transposed kernel [C,K,s,s,s], no bias
template <class S>
void add_up(NetworkParametersT<S>& params, const std::string& prefix, std::int64_t c_in,
            std::int64_t c_out, std::int64_t s, Rng& rng) {
    params.add(prefix + ".kernel", init_kernel<S>({c_in, c_out, s, s, s}, c_in * s * s * s, rng));
}

// Residual conv block: convs_per_stage (conv + SeLU), plus an additive
// shortcut from the block input (1x1x1-projected when channels differ).
template <class S>
TensorT<S> conv_block(const NetworkParametersT<S>& params, const std::string& prefix,
                      const TensorT<S>& input, int convs, std::int64_t pad) {
    TensorT<S> x = input;
    for (int j = 0; j < convs; ++j) {
        const std::string p = prefix + ".conv" + std::to_string(j);
        x = selu(conv3d(x, params.find(p + ".kernel"), params.find(p + ".bias"), 1, pad));
    }
    TensorT<S> shortcut = input;
    if (input.dim(1) != x.dim(1)) {
        const std::string p = prefix + ".proj";
        shortcut = conv3d(input, params.find(p + ".kernel"), params.find(p + ".bias"), 1, 0);
    }
    return add(x, shortcut);
}

}  // namespace

template <class S>
NetworkParametersT<S> build_network(const NetworkConfig& config, Rng& rng) {
    config.validate();
    NetworkParametersT<S> params(config);
    const std::int64_t k = config.kernel_size;
    const std::int64_t bc = config.base_channels;
    auto ch = [bc](int level) { return bc << level; };

    for (int s = 0; s < config.stages; ++s) {
        const std::int64_t c_in = s == 0 ? 1 : ch(s);
        const std::string prefix = "enc" + std::to_string(s);
        for (int j = 0; j < config.convs_per_stage; ++j)
            add_conv(params, prefix + ".conv" + std::to_string(j),
                     j == 0 ? c_in : ch(s), ch(s), k, rng);
        if (c_in != ch(s)) add_conv(params, prefix + ".proj", c_in, ch(s), 1, rng);
        add_conv(params, "down" + std::to_string(s), ch(s), ch(s + 1), 2, rng);
    }

    for (int j = 0; j < config.convs_per_stage; ++j)
        add_conv(params, "bottleneck.conv" + std::to_string(j), ch(config.stages),
                 ch(config.stages), k, rng);

    for (int s = config.stages - 1; s >= 0; --s) {
        add_up(params, "up" + std::to_string(s), ch(s + 1), ch(s), 2, rng);
        const std::string prefix = "dec" + std::to_string(s);
        for (int j = 0; j < config.convs_per_stage; ++j)
            add_conv(params, prefix + ".conv" + std::to_string(j),
                     j == 0 ? 2 * ch(s) : ch(s), ch(s), k, rng);
        add_conv(params, prefix + ".proj", 2 * ch(s), ch(s), 1, rng);
    }

    add_conv(params, "head", ch(0), 1, 1, rng);
    return params;
}

template <class S>
TensorT<S> network_forward(const NetworkParametersT<S>& params, const TensorT<S>& patch,
                           bool training, Rng& rng) {
    const NetworkConfig& cfg = params.config();
    cfg.validate();
    if (!patch.defined() || patch.shape().size() != 5 || patch.dim(1) != 1 ||
        patch.dim(2) != cfg.input_patch_size || patch.dim(3) != cfg.input_patch_size ||
        patch.dim(4) != cfg.input_patch_size) {
        throw std::invalid_argument(
            "network_forward: expected patch [N,1," + std::to_string(cfg.input_patch_size) +
            "^3], got " + (patch.defined() ? shape_to_string(patch.shape()) : "undefined"));
    }
    const std::int64_t pad = (cfg.kernel_size - 1) / 2;

    TensorT<S> x = patch;
    std::vector<TensorT<S>> skips;
    skips.reserve(static_cast<std::size_t>(cfg.stages));
    for (int s = 0; s < cfg.stages; ++s) {
        x = conv_block(params, "enc" + std::to_string(s), x, cfg.convs_per_stage, pad);
        skips.push_back(x);
        const std::string dp = "down" + std::to_string(s);
        x = selu(conv3d(x, params.find(dp + ".kernel"), params.find(dp + ".bias"), 2, 0));
    }

    x = conv_block(params, "bottleneck", x, cfg.convs_per_stage, pad);
    x = dropout(x, cfg.dropout_rate, training, rng);

    for (int s = cfg.stages - 1; s >= 0; --s) {
        x = conv3d_transposed(x, params.find("up" + std::to_string(s) + ".kernel"), 2);
        x = concat_channels(x, skips[static_cast<std::size_t>(s)]);
        x = conv_block(params, "dec" + std::to_string(s), x, cfg.convs_per_stage, pad);
        x = dropout(x, cfg.dropout_rate, training, rng);
    }

    x = conv3d(x, params.find("head.kernel"), params.find("head.bias"), 1, 0);
    return sigmoid(x);
}

template class NetworkParametersT<float>;
template class NetworkParametersT<double>;

template NetworkParametersT<float> build_network(const NetworkConfig&, Rng&);
template NetworkParametersT<double> build_network(const NetworkConfig&, Rng&);
template TensorT<float> network_forward(const NetworkParametersT<float>&, const TensorT<float>&,
                                        bool, Rng&);
template TensorT<double> network_forward(const NetworkParametersT<double>&,
                                         const TensorT<double>&, bool, Rng&);

}  // namespace vseg
