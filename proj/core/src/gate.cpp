#include "cgcv/gate.hpp"

#include <cmath>

#include "cgcv/counters.hpp"

namespace cgcv {

GateMode gate_mode_from_string(const std::string& s) {
    if (s == "sigmoid") return GateMode::Sigmoid;
    if (s == "softmax") return GateMode::Softmax;
    if (s == "none") return GateMode::None;
    throw ConfigError("unknown gate mode '" + s + "' (sigmoid|softmax|none)");
}

std::string to_string(GateMode m) {
    switch (m) {
        case GateMode::Sigmoid: return "sigmoid";
        case GateMode::Softmax: return "softmax";
        case GateMode::None: return "none";
    }
    return "?";
}

template <typename T>
QKMaps<T> project_qk(const ContextBundle<T>& ctx, const GateParams<T>& p) {
    counters::detail::bump_project_qk();
    if (ctx.net1.channels != p.t || ctx.net2.channels != p.t)
        throw DimensionError("project_qk: net channel count does not match t");
    if (p.wq.size() != static_cast<size_t>(p.d) * p.t ||
        p.wk.size() != static_cast<size_t>(p.d) * p.t)
        throw DimensionError("project_qk: weight matrix is not d x t");
    QKMaps<T> qk;
    auto apply = [&](const std::vector<T>& w, const FeatureMap<T>& in) {
        FeatureMap<T> out(p.d, in.height, in.width);
        const size_t ps = in.plane_size();
        for (int r = 0; r < p.d; ++r) {
            const T* wrow = w.data() + static_cast<size_t>(r) * p.t;
            T* dst = out.plane(r);
            for (size_t px = 0; px < ps; ++px) {
                T acc = T(0);
                for (int c = 0; c < p.t; ++c)
                    acc += wrow[c] * in.data[static_cast<size_t>(c) * ps + px];
                dst[px] = acc;
            }
        }
        return out;
    };
    qk.q = apply(p.wq, ctx.net1);
    qk.k = apply(p.wk, ctx.net2);
    return qk;
}

template <typename T>
CorrVolume4<T> cross_attention(const QKMaps<T>& qk, GateMode mode) {
    counters::detail::bump_cross_attention();
    if (mode == GateMode::None)
        throw ContractViolation(
            "cross_attention: mode 'none' has no attention map; skip the call");
    if (qk.q.channels != qk.k.channels)
        throw DimensionError("cross_attention: q/k channel mismatch");
    const T scale = T(1) / std::sqrt(static_cast<T>(qk.q.channels));
    CorrVolume4<T> logits = detail::all_pairs_scaled(qk.q, qk.k, scale);
    return mode == GateMode::Sigmoid ? map_sigmoid(logits)
                                     : map_softmax_lastdims(logits);
}

template <typename T>
CorrVolume4<T> gate(const CorrVolume4<T>& c, const CorrVolume4<T>& a) {
    counters::detail::bump_gate();
    if (!c.same_shape(a)) throw DimensionError("gate: volume shape mismatch");
    CorrVolume4<T> m(c.h1, c.w1, c.h2, c.w2);
    for (size_t n = 0; n < c.data.size(); ++n) m.data[n] = a.data[n] * c.data[n];
    return m;
}

template <typename T>
CorrVolume4<T> context_correlation(const ContextBundle<T>& ctx) {
    counters::detail::bump_context_correlation();
    if (ctx.net1.channels != ctx.net2.channels)
        throw DimensionError("context_correlation: net channel mismatch");
    const T scale = T(1) / std::sqrt(static_cast<T>(ctx.net1.channels));
    return detail::all_pairs_scaled(ctx.net1, ctx.net2, scale);
}

namespace {

template <typename T>
CorrVolume4<T> assemble_impl(const CorrVolume4<T>& c, const ContextBundle<T>& ctx,
                             const GateParams<T>& p, AssembleState<T>* state) {
    counters::detail::bump_assemble();
    CorrVolume4<T> m;
    if (p.gate_mode != GateMode::None) {
        QKMaps<T> qk = project_qk(ctx, p);
        CorrVolume4<T> a = cross_attention(qk, p.gate_mode);
        m = gate(c, a);
        if (state) {
            state->qk = std::move(qk);
            state->attention = std::move(a);
        }
    } else {
        m = c;
    }
    CorrVolume4<T> s;
    if (p.lift_enabled) {
        s = context_correlation(ctx);
        if (s.data.size() != m.data.size())
            throw DimensionError("assemble: context volume shape mismatch");
        if (p.lambda != T(0))
            for (size_t n = 0; n < m.data.size(); ++n)
                m.data[n] += p.lambda * s.data[n];
    }
    if (state) {
        state->valid = true;
        state->gate_mode = p.gate_mode;
        state->lift_enabled = p.lift_enabled;
        state->lambda = p.lambda;
        state->wq = p.wq;
        state->wk = p.wk;
        state->net1 = ctx.net1;
        state->net2 = ctx.net2;
        state->c = c;
        state->context = std::move(s);
    }
    return m;
}

}  // namespace

template <typename T>
CorrVolume4<T> assemble(const CorrVolume4<T>& c, const ContextBundle<T>& ctx,
                        const GateParams<T>& p) {
    return assemble_impl<T>(c, ctx, p, nullptr);
}

template <typename T>
CorrVolume4<T> assemble_with_state(const CorrVolume4<T>& c,
                                   const FeatureMap<T>& g1,
                                   const FeatureMap<T>& g2,
                                   const ContextBundle<T>& ctx,
                                   const GateParams<T>& p,
                                   AssembleState<T>& state) {
    state = AssembleState<T>{};
    CorrVolume4<T> v = assemble_impl<T>(c, ctx, p, &state);
    state.g1 = g1;
    state.g2 = g2;
    return v;
}

namespace detail {

template <typename T>
void all_pairs_backward(const CorrVolume4<T>& vol_grad, const FeatureMap<T>& a,
                        const FeatureMap<T>& b, T scale, FeatureMap<T>& grad_a,
                        FeatureMap<T>& grad_b) {
    const int ch = a.channels;
    const size_t ref_cells = vol_grad.num_planes();
    const size_t tgt_cells = vol_grad.plane_size();
    for (size_t p = 0; p < ref_cells; ++p) {
        const T* grow = vol_grad.data.data() + p * tgt_cells;
        for (size_t q = 0; q < tgt_cells; ++q) {
            const T g = scale * grow[q];
            if (g == T(0)) continue;
            for (int c = 0; c < ch; ++c) {
                grad_a.data[static_cast<size_t>(c) * ref_cells + p] +=
                    g * b.data[static_cast<size_t>(c) * tgt_cells + q];
                grad_b.data[static_cast<size_t>(c) * tgt_cells + q] +=
                    g * a.data[static_cast<size_t>(c) * ref_cells + p];
            }
        }
    }
}

template void all_pairs_backward<float>(const CorrVolume4<float>&,
                                        const FeatureMap<float>&,
                                        const FeatureMap<float>&, float,
                                        FeatureMap<float>&, FeatureMap<float>&);
template void all_pairs_backward<double>(const CorrVolume4<double>&,
                                         const FeatureMap<double>&,
                                         const FeatureMap<double>&, double,
                                         FeatureMap<double>&,
                                         FeatureMap<double>&);

}  // namespace detail

template <typename T>
AssembleGrads<T> backward_assemble(const CorrVolume4<T>& grad_v,
                                   const AssembleState<T>& state) {
    if (!state.valid)
        throw ContractViolation(
            "backward_assemble: no saved forward state (run assemble_with_state)");
    const int t = state.net1.channels;

    AssembleGrads<T> g;
    g.wq.assign(state.wq.size(), T(0));
    g.wk.assign(state.wk.size(), T(0));
    g.g1 = FeatureMap<T>(state.g1.channels, state.g1.height, state.g1.width);
    g.g2 = FeatureMap<T>(state.g2.channels, state.g2.height, state.g2.width);
    g.net1 = FeatureMap<T>(t, state.net1.height, state.net1.width);
    g.net2 = FeatureMap<T>(t, state.net2.height, state.net2.width);

    // lift branch: V = M + lambda * S
    if (state.lift_enabled) {
        for (size_t n = 0; n < grad_v.data.size(); ++n)
            g.lambda += grad_v.data[n] * state.context.data[n];
        if (state.lambda != T(0)) {
            CorrVolume4<T> grad_s(grad_v.h1, grad_v.w1, grad_v.h2, grad_v.w2);
            for (size_t n = 0; n < grad_v.data.size(); ++n)
                grad_s.data[n] = state.lambda * grad_v.data[n];
            const T scale = T(1) / std::sqrt(static_cast<T>(t));
            detail::all_pairs_backward(grad_s, state.net1, state.net2, scale,
                                       g.net1, g.net2);
        }
    }

    // gate branch: M = A . C (or M = C when the gate is off)
    CorrVolume4<T> grad_c(grad_v.h1, grad_v.w1, grad_v.h2, grad_v.w2);
    if (state.gate_mode != GateMode::None) {
        const CorrVolume4<T>& a = state.attention;
        CorrVolume4<T> grad_logits(grad_v.h1, grad_v.w1, grad_v.h2, grad_v.w2);
        if (state.gate_mode == GateMode::Sigmoid) {
            for (size_t n = 0; n < grad_v.data.size(); ++n) {
                const T ga = grad_v.data[n] * state.c.data[n];
                grad_c.data[n] = grad_v.data[n] * a.data[n];
                grad_logits.data[n] = ga * a.data[n] * (T(1) - a.data[n]);
            }
        } else {
            const size_t ps = a.plane_size();
            for (size_t p = 0; p < a.num_planes(); ++p) {
                const T* ap = a.data.data() + p * ps;
                const T* gv = grad_v.data.data() + p * ps;
                const T* cp = state.c.data.data() + p * ps;
                T* gc = grad_c.data.data() + p * ps;
                T* gl = grad_logits.data.data() + p * ps;
                T dot = T(0);
                for (size_t n = 0; n < ps; ++n) {
                    const T ga = gv[n] * cp[n];
                    gc[n] = gv[n] * ap[n];
                    gl[n] = ga;  // temporarily grad wrt A
                    dot += ga * ap[n];
                }
                for (size_t n = 0; n < ps; ++n) gl[n] = ap[n] * (gl[n] - dot);
            }
        }
        // logits = (1/sqrt(d)) q^T k
        const int d = state.qk.q.channels;
        FeatureMap<T> grad_q(d, state.qk.q.height, state.qk.q.width);
        FeatureMap<T> grad_k(d, state.qk.k.height, state.qk.k.width);
        const T scale = T(1) / std::sqrt(static_cast<T>(d));
        detail::all_pairs_backward(grad_logits, state.qk.q, state.qk.k, scale,
                                   grad_q, grad_k);
        // q = Wq net1, k = Wk net2
        const size_t ps1 = state.net1.plane_size();
        const size_t ps2 = state.net2.plane_size();
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < t; ++c) {
                T acc_q = T(0), acc_k = T(0);
                for (size_t px = 0; px < ps1; ++px)
                    acc_q += grad_q.data[static_cast<size_t>(r) * ps1 + px] *
                             state.net1.data[static_cast<size_t>(c) * ps1 + px];
                for (size_t px = 0; px < ps2; ++px)
                    acc_k += grad_k.data[static_cast<size_t>(r) * ps2 + px] *
                             state.net2.data[static_cast<size_t>(c) * ps2 + px];
                g.wq[static_cast<size_t>(r) * t + c] += acc_q;
                g.wk[static_cast<size_t>(r) * t + c] += acc_k;
            }
        }
        for (int c = 0; c < t; ++c) {
            for (size_t px = 0; px < ps1; ++px) {
                T acc = T(0);
                for (int r = 0; r < d; ++r)
                    acc += state.wq[static_cast<size_t>(r) * t + c] *
                           grad_q.data[static_cast<size_t>(r) * ps1 + px];
                g.net1.data[static_cast<size_t>(c) * ps1 + px] += acc;
            }
            for (size_t px = 0; px < ps2; ++px) {
                T acc = T(0);
                for (int r = 0; r < d; ++r)
                    acc += state.wk[static_cast<size_t>(r) * t + c] *
                           grad_k.data[static_cast<size_t>(r) * ps2 + px];
                g.net2.data[static_cast<size_t>(c) * ps2 + px] += acc;
            }
        }
    } else {
        grad_c.data = grad_v.data;
    }

    // all-pairs adjoint into the matching features
    const T scale_n = T(1) / std::sqrt(static_cast<T>(state.g1.channels));
    detail::all_pairs_backward(grad_c, state.g1, state.g2, scale_n, g.g1, g.g2);
    return g;
}

#define CGCV_INSTANTIATE(T)                                                       \
    template QKMaps<T> project_qk<T>(const ContextBundle<T>&,                    \
                                     const GateParams<T>&);                      \
    template CorrVolume4<T> cross_attention<T>(const QKMaps<T>&, GateMode);      \
    template CorrVolume4<T> gate<T>(const CorrVolume4<T>&,                       \
                                    const CorrVolume4<T>&);                      \
    template CorrVolume4<T> context_correlation<T>(const ContextBundle<T>&);     \
    template CorrVolume4<T> assemble<T>(const CorrVolume4<T>&,                   \
                                        const ContextBundle<T>&,                 \
                                        const GateParams<T>&);                   \
    template CorrVolume4<T> assemble_with_state<T>(                              \
        const CorrVolume4<T>&, const FeatureMap<T>&, const FeatureMap<T>&,       \
        const ContextBundle<T>&, const GateParams<T>&, AssembleState<T>&);       \
    template AssembleGrads<T> backward_assemble<T>(const CorrVolume4<T>&,        \
                                                   const AssembleState<T>&);

CGCV_INSTANTIATE(float)
CGCV_INSTANTIATE(double)
#undef CGCV_INSTANTIATE

}  // namespace cgcv
