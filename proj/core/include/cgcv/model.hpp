#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgcv/corr.hpp"
#include "cgcv/encoder.hpp"
#include "cgcv/gate.hpp"

namespace cgcv {

// Runtime shape of the whole flow model. gate_mode / lift_enabled are the
// two ablation axes; everything else sizes tensors.
struct ModelConfig {
    int match_channels = 256;    // n
    int context_channels = 256;  // 2t, split into net/inp halves
    int qk_channels = 128;       // d
    std::array<int, 2> enc_hidden = {32, 64};
    int enc_ksize = 3;  // 2 gives non-overlapping 8x8 receptive fields
    int radius = 4;
    int levels = 4;
    int iterations = 8;
    GateMode gate_mode = GateMode::Sigmoid;
    bool lift_enabled = true;
    uint32_t seed = 0;

    int net_channels() const { return context_channels / 2; }
    LookupConfig lookup() const { return LookupConfig{radius, levels}; }
    int corr_length() const { return lookup().feature_length(); }

    // Desk-scale preset used by the gradient-check harness and toy training.
    static ModelConfig toy();
};

// ConvGRU update weights. Each gate convolution reads [hidden | input].
template <typename T>
struct GruWeights {
    ConvLayer<T> wz, wr, wh;
    ConvLayer<T> flow_head;  // hidden -> 2 (du, dv)
};

template <typename T>
struct Model {
    ModelConfig cfg;
    EncoderWeights<T> match_enc;
    EncoderWeights<T> ctx_enc;
    GateParams<T> gate;
    GruWeights<T> gru;
};

// Name + storage of one learnable tensor; `data` points into the model.
template <typename T>
struct ParamRef {
    std::string name;
    T* data = nullptr;
    size_t size = 0;
    std::vector<uint32_t> dims;
};

template <typename T>
Model<T> make_model(const ModelConfig& cfg);

// Every learnable tensor, fixed order; the same enumeration backs the
// checkpoint table, the gradient checker, and the training update.
template <typename T>
std::vector<ParamRef<T>> param_refs(Model<T>& m);

template <typename T>
Model<T> make_zero_like(const Model<T>& m);

// p += alpha * g for every learnable.
template <typename T>
void axpy_params(Model<T>& m, Model<T>& grads, T alpha);

template <typename T>
void scale_params(Model<T>& m, T alpha);

// Widening/narrowing copy between float and double models.
template <typename To, typename From>
Model<To> convert_model(const Model<From>& m);

template <typename To, typename From>
FeatureMap<To> convert_map(const FeatureMap<From>& m);

template <typename To, typename From>
FlowField<To> convert_flow(const FlowField<From>& f);

}  // namespace cgcv
