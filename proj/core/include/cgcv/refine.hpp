#pragma once

#include "cgcv/model.hpp"

namespace cgcv {

template <typename T>
struct GRUState {
    FeatureMap<T> hidden;  // t channels, values in (-1, 1)
};

// Temperature of the soft-argmax displacement summary. The level-0 lookup
// window is reduced to an expected offset under softmax(kSoftArgmaxSharpness
// * corr); the two resulting channels give the update unit and the flow
// head a direct, well-scaled view of the correlation peak.
inline constexpr double kSoftArgmaxSharpness = 4.0;

// Expected (dx, dy) of the level-0 window under the sharpened softmax; one
// 2-channel map over the reference grid.
template <typename T>
FeatureMap<T> soft_argmax_offsets(const CorrFeatures<T>& corr, int radius);

struct RefineConfig {
    int iterations = 8;
    int hidden_channels = 128;
};

// hidden = tanh(net1), flow = 0.
template <typename T>
void init_state(const ContextBundle<T>& ctx, GRUState<T>& state,
                FlowField<T>& flow);

// Saved tensors for one GRU update, enough to replay it backwards.
template <typename T>
struct GruStepTrace {
    FeatureMap<T> hidden_in;
    FeatureMap<T> hx;        // [hidden | x]
    FeatureMap<T> rhx;       // [r . hidden | x]
    FeatureMap<T> z, r, cand;
    FeatureMap<T> hidden_out;
    FeatureMap<T> head_in;   // [hidden_out | soft-argmax]
    FeatureMap<T> sa;        // soft-argmax offsets
    CorrFeatures<T> corr;
    FlowField<T> flow_in;
    int radius = 0;
};

// One convolutional GRU update; flow <- flow + conv head over the new
// hidden state and the soft-argmax channels. `radius` identifies the
// level-0 window inside the correlation features.
template <typename T>
void gru_step(const GruWeights<T>& w, const GRUState<T>& state,
              const CorrFeatures<T>& corr, const FeatureMap<T>& inp,
              const FlowField<T>& flow, int radius, GRUState<T>& state_out,
              FlowField<T>& flow_out, GruStepTrace<T>* trace = nullptr);

// Gradients flowing out of one GRU step.
template <typename T>
struct GruStepGrads {
    FeatureMap<T> hidden_in;
    FeatureMap<T> inp;
    CorrFeatures<T> corr;
    FlowField<T> flow_in;
};

template <typename T>
GruStepGrads<T> gru_step_backward(const GruWeights<T>& w,
                                  const GruStepTrace<T>& trace,
                                  const FeatureMap<T>& grad_hidden_out,
                                  const FlowField<T>& grad_flow_out,
                                  GruWeights<T>& weight_grads);

// Everything saved between a traced forward pass and its backward sweep.
template <typename T>
struct ModelTrace {
    EncoderTrace<T> enc_g1, enc_g2;
    EncoderTrace<T> enc_c1, enc_c2;
    FeatureMap<T> g1, g2;
    ContextBundle<T> ctx;
    AssembleState<T> assemble_state;
    CorrPyramid<T> pyramid;  // pooled gated/lifted volume
    std::vector<GruStepTrace<T>> steps;
};

// Full forward pass from an aligned image pair to per-iteration coarse
// flows. The volume kernels run exactly once; every refinement iteration
// only samples the pyramid. `init_flow` overrides the zero flow start
// (used by the gradient checker); pass nullptr for the standard path.
template <typename T>
std::vector<FlowField<T>> model_forward(const ImagePair<T>& pair,
                                        const Model<T>& model, int iterations,
                                        ModelTrace<T>* trace = nullptr,
                                        const FlowField<T>* init_flow = nullptr);

// Reverse sweep through iterations, lookup, pyramid, gate/lift and both
// encoders. grad_flows[i] is the loss gradient on the i-th coarse flow.
template <typename T>
Model<T> model_backward(const Model<T>& model, const ModelTrace<T>& trace,
                        const std::vector<FlowField<T>>& grad_flows);

// Bilinear x8 upsampling with replicated edges; displacements scale by 8.
template <typename T>
FlowField<T> upsample_flow_x8(const FlowField<T>& coarse, int out_h, int out_w);

// End-to-end convenience: pyramid + refinement + upsample + crop.
template <typename T>
FlowField<T> run_refinement(const FeatureMap<T>& g1, const FeatureMap<T>& g2,
                            const ContextBundle<T>& ctx, const Model<T>& model,
                            const RefineConfig& cfg, const PadRecord& pad,
                            int full_height, int full_width);

template <typename T>
FeatureMap<T> corr_to_fmap(const CorrFeatures<T>& corr);

// Adjoint of lookup: scatters feature grads into per-level volume grads and
// accumulates the positional gradient into grad_flow.
template <typename T>
void lookup_backward(const CorrPyramid<T>& p, const FlowField<T>& flow,
                     const LookupConfig& cfg, const CorrFeatures<T>& grad_feat,
                     std::vector<CorrVolume4<T>>& grad_levels,
                     FlowField<T>& grad_flow);

// Adjoint of avg_pool_target: spreads each pooled gradient over its 2x2 block.
template <typename T>
CorrVolume4<T> avg_pool_target_backward(const CorrVolume4<T>& grad_out, int h2,
                                        int w2);

}  // namespace cgcv
