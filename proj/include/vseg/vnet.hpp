#pragma once

#include <string>
#include <vector>

#include "vseg/rng.hpp"
#include "vseg/tensor.hpp"

namespace vseg {

struct NetworkConfig {
    int stages = 3;            // encoder depth (number of downsamplings)
    int base_channels = 8;
    int convs_per_stage = 2;
    int kernel_size = 3;       // odd
    double dropout_rate = 0.6;
    int input_patch_size = 32; // cubic edge, divisible by 2^stages

    void validate() const;
};

template <class S>
struct NamedParam {
    std::string name;
    TensorT<S> tensor;
};

// Ordered collection of named kernels/biases; the order and shapes are a pure
// function of NetworkConfig.
template <class S>
class NetworkParametersT {
public:
    NetworkParametersT() = default;
    explicit NetworkParametersT(NetworkConfig config) : config_(std::move(config)) {}

    const NetworkConfig& config() const { return config_; }

    void add(std::string name, TensorT<S> tensor);
    TensorT<S>& find(const std::string& name);
    const TensorT<S>& find(const std::string& name) const;

    std::vector<NamedParam<S>>& items() { return params_; }
    const std::vector<NamedParam<S>>& items() const { return params_; }
    std::size_t size() const { return params_.size(); }

    std::int64_t total_parameter_count() const;
    bool all_finite() const;

private:
    NetworkConfig config_;
    std::vector<NamedParam<S>> params_;
};

// Encoder levels with residual conv blocks, stride-2 downsampling convs, a
// bottleneck, transposed-conv upsampling with skip concatenation, and a
// 1x1x1 conv + sigmoid head. Kernels are drawn from N(0, 1/fan_in), biases
// start at zero.
template <class S>
NetworkParametersT<S> build_network(const NetworkConfig& config, Rng& rng);

// patch [N,1,P,P,P] -> per-voxel foreground probabilities [N,1,P,P,P].
// training=false is a pure function of (params, patch); rng is only touched
// by dropout in training mode.
template <class S>
TensorT<S> network_forward(const NetworkParametersT<S>& params, const TensorT<S>& patch,
                           bool training, Rng& rng);

using NetworkParameters = NetworkParametersT<float>;

extern template class NetworkParametersT<float>;
extern template class NetworkParametersT<double>;

}  // namespace vseg
