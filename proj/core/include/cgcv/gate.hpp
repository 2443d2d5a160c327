#pragma once

#include <string>
#include <vector>

#include "cgcv/corr.hpp"
#include "cgcv/tensor.hpp"

namespace cgcv {

enum class GateMode { Sigmoid, Softmax, None };

GateMode gate_mode_from_string(const std::string& s);
std::string to_string(GateMode m);

// Siamese context features, split channel-wise into the half that seeds the
// refinement hidden state (net) and the half fed to the update inputs (inp).
// inp2 is produced for symmetry but no consumer reads it.
template <typename T>
struct ContextBundle {
    FeatureMap<T> net1, inp1;
    FeatureMap<T> net2, inp2;
};

// Learnable gate/lift parameters plus the runtime ablation switches.
template <typename T>
struct GateParams {
    int d = 0;           // query/key feature length
    int t = 0;           // net feature length
    std::vector<T> wq;   // d x t, row-major
    std::vector<T> wk;   // d x t, row-major
    T lambda = T(0);     // lift weight, trained from zero
    GateMode gate_mode = GateMode::Sigmoid;
    bool lift_enabled = true;
};

template <typename T>
struct QKMaps {
    FeatureMap<T> q;  // d channels on the reference grid
    FeatureMap<T> k;  // d channels on the target grid
};

// Everything the backward pass needs, captured by assemble_with_state.
template <typename T>
struct AssembleState {
    bool valid = false;
    GateMode gate_mode = GateMode::Sigmoid;
    bool lift_enabled = true;
    T lambda = T(0);
    std::vector<T> wq, wk;     // projection weights at forward time
    FeatureMap<T> g1, g2;      // matching features that produced c
    FeatureMap<T> net1, net2;  // context halves entering the gate and lift
    QKMaps<T> qk;
    CorrVolume4<T> c;          // raw correlation volume
    CorrVolume4<T> attention;  // A (empty when gate_mode == None)
    CorrVolume4<T> context;    // S (empty when lift disabled)
};

template <typename T>
struct AssembleGrads {
    std::vector<T> wq, wk;
    T lambda = T(0);
    FeatureMap<T> g1, g2;
    FeatureMap<T> net1, net2;
};

// Q = Wq . net1, K = Wk . net2 (per-pixel linear maps, no bias).
template <typename T>
QKMaps<T> project_qk(const ContextBundle<T>& ctx, const GateParams<T>& p);

// A[i,j,k,l] = sigma(<q[:,j,i], k[:,l,k]> / sqrt(d)) with sigma per mode.
template <typename T>
CorrVolume4<T> cross_attention(const QKMaps<T>& qk, GateMode mode);

// M = A (element-wise *) C.
template <typename T>
CorrVolume4<T> gate(const CorrVolume4<T>& c, const CorrVolume4<T>& a);

// S[i,j,k,l] = (1/sqrt(t)) <net1[:,j,i], net2[:,l,k]>.
template <typename T>
CorrVolume4<T> context_correlation(const ContextBundle<T>& ctx);

// V = gate(C, A) + lambda * S, honoring gate_mode == None (A skipped, M = C)
// and lift_enabled == false (the lambda term omitted). With lambda == 0 the
// addition is skipped entirely so V is bit-identical to M.
template <typename T>
CorrVolume4<T> assemble(const CorrVolume4<T>& c, const ContextBundle<T>& ctx,
                        const GateParams<T>& p);

// As assemble, but captures the forward state required by backward_assemble.
// `c` must have been built from (g1, g2) by build_all_pairs.
template <typename T>
CorrVolume4<T> assemble_with_state(const CorrVolume4<T>& c,
                                   const FeatureMap<T>& g1,
                                   const FeatureMap<T>& g2,
                                   const ContextBundle<T>& ctx,
                                   const GateParams<T>& p,
                                   AssembleState<T>& state);

// Exact reverse-mode gradients of V through Eqs. of the gate/lift chain.
template <typename T>
AssembleGrads<T> backward_assemble(const CorrVolume4<T>& grad_v,
                                   const AssembleState<T>& state);

namespace detail {
// grad_a[:,p] += scale * sum_q vol_grad[p,q] b[:,q] and the transposed
// counterpart into grad_b; the adjoint of all_pairs_scaled.
template <typename T>
void all_pairs_backward(const CorrVolume4<T>& vol_grad, const FeatureMap<T>& a,
                        const FeatureMap<T>& b, T scale, FeatureMap<T>& grad_a,
                        FeatureMap<T>& grad_b);
}  // namespace detail

}  // namespace cgcv
