#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cgcv/tensor.hpp"

namespace cgcv {

// Plain 2D convolution layer, zero padding, weights [oc][ic][ky][kx].
template <typename T>
struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int ksize = 3;
    int stride = 1;
    int pad = 1;
    std::vector<T> weight;  // oc * ic * k * k
    std::vector<T> bias;    // oc

    ConvLayer() = default;
    ConvLayer(int ic, int oc, int k, int s, int p)
        : in_channels(ic), out_channels(oc), ksize(k), stride(s), pad(p),
          weight(static_cast<size_t>(oc) * ic * k * k, T(0)), bias(oc, T(0)) {}

    int out_dim(int in) const { return (in + 2 * pad - ksize) / stride + 1; }
};

// He-style uniform initialization, bias left at zero.
template <typename T>
void init_he_uniform(ConvLayer<T>& layer, std::mt19937& rng);

template <typename T>
FeatureMap<T> conv_forward(const ConvLayer<T>& layer, const FeatureMap<T>& in);

// Accumulates into grad_in / grad_weight / grad_bias (callers own zeroing).
template <typename T>
void conv_backward(const ConvLayer<T>& layer, const FeatureMap<T>& in,
                   const FeatureMap<T>& grad_out, FeatureMap<T>* grad_in,
                   std::vector<T>* grad_weight, std::vector<T>* grad_bias);

template <typename T>
FeatureMap<T> relu(const FeatureMap<T>& in);

// grad_in = grad_out where the forward input was positive.
template <typename T>
FeatureMap<T> relu_backward(const FeatureMap<T>& in, const FeatureMap<T>& grad_out);

template <typename T>
FeatureMap<T> map_tanh(const FeatureMap<T>& in);

template <typename T>
FeatureMap<T> map_sigmoid(const FeatureMap<T>& in);

// Channel-wise concatenation of maps sharing spatial dims.
template <typename T>
FeatureMap<T> concat_channels(const std::vector<const FeatureMap<T>*>& parts);

}  // namespace cgcv
