#pragma once

#include <array>
#include <cstdint>

#include "cgcv/conv.hpp"
#include "cgcv/gate.hpp"

namespace cgcv {

// Three stride-2 stages (so the output grid is exactly 1/8 of the input),
// ReLU between stages, linear final layer.
struct EncoderConfig {
    int out_channels = 256;
    std::array<int, 2> hidden = {32, 64};
    int ksize = 3;
    uint32_t seed = 0;
};

template <typename T>
struct EncoderWeights {
    ConvLayer<T> conv1, conv2, conv3;
};

// Activations retained for the backward sweep.
template <typename T>
struct EncoderTrace {
    FeatureMap<T> input;
    FeatureMap<T> pre1, act1;  // conv1 output, relu(conv1)
    FeatureMap<T> pre2, act2;
};

struct PadRecord {
    int right = 0;
    int bottom = 0;
    bool empty() const { return right == 0 && bottom == 0; }
};

template <typename T>
struct PaddedImage {
    FeatureMap<T> image;
    PadRecord pad;
};

template <typename T>
struct ImagePair {
    FeatureMap<T> reference;  // 3 x H x W, values in [0, 1]
    FeatureMap<T> target;
};

template <typename T>
EncoderWeights<T> make_encoder(const EncoderConfig& cfg, int in_channels = 3);

// Replicate-pad right/bottom to the next multiple of 8.
template <typename T>
PaddedImage<T> pad_to_grid(const FeatureMap<T>& img);

// n-channel feature map at (H/8, W/8); deterministic given weights.
template <typename T>
FeatureMap<T> encode_matching(const FeatureMap<T>& img,
                              const EncoderWeights<T>& w,
                              EncoderTrace<T>* trace = nullptr);

// Same weights applied to both frames; output split channel-wise into the
// net half (first) and inp half (second) per frame.
template <typename T>
ContextBundle<T> encode_context(const ImagePair<T>& pair,
                                const EncoderWeights<T>& w,
                                EncoderTrace<T>* trace_ref = nullptr,
                                EncoderTrace<T>* trace_tgt = nullptr);

// Accumulates weight gradients and (optionally) the input-image gradient.
template <typename T>
void encoder_backward(const EncoderWeights<T>& w, const EncoderTrace<T>& trace,
                      const FeatureMap<T>& grad_out, EncoderWeights<T>& grads,
                      FeatureMap<T>* grad_input = nullptr);

template <typename T>
FeatureMap<T> split_channels(const FeatureMap<T>& m, int from, int count);

}  // namespace cgcv
