#include "cgcv/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cgcv {

namespace {

template <typename T>
FeatureMap<T> flow_to_fmap(const FlowField<T>& f) {
    FeatureMap<T> out(2, f.height, f.width);
    std::copy(f.u.begin(), f.u.end(), out.plane(0));
    std::copy(f.v.begin(), f.v.end(), out.plane(1));
    return out;
}

template <typename T>
void add_fmap_to_flow(const FeatureMap<T>& m, int chan_u, FlowField<T>& f) {
    const T* up = m.plane(chan_u);
    const T* vp = m.plane(chan_u + 1);
    for (size_t n = 0; n < f.u.size(); ++n) {
        f.u[n] += up[n];
        f.v[n] += vp[n];
    }
}

template <typename T>
void add_channels(const FeatureMap<T>& src, int from, FeatureMap<T>& dst) {
    const size_t ps = dst.plane_size();
    for (int c = 0; c < dst.channels; ++c) {
        const T* s = src.plane(from + c);
        T* d = dst.plane(c);
        for (size_t n = 0; n < ps; ++n) d[n] += s[n];
    }
}

// convex combination can round up to the open bound; keep it strictly inside
template <typename T>
void clamp_open_unit(FeatureMap<T>& m) {
    const T lim = T(1) - std::numeric_limits<T>::epsilon() / T(2);
    for (T& x : m.data) x = std::clamp(x, -lim, lim);
}

}  // namespace

template <typename T>
void init_state(const ContextBundle<T>& ctx, GRUState<T>& state,
                FlowField<T>& flow) {
    state.hidden = map_tanh(ctx.net1);
    flow = FlowField<T>(ctx.net1.height, ctx.net1.width);
}

template <typename T>
FeatureMap<T> corr_to_fmap(const CorrFeatures<T>& corr) {
    FeatureMap<T> out(corr.length, corr.height, corr.width);
    const size_t cells = static_cast<size_t>(corr.height) * corr.width;
    for (size_t cell = 0; cell < cells; ++cell)
        for (int f = 0; f < corr.length; ++f)
            out.data[static_cast<size_t>(f) * cells + cell] =
                corr.data[cell * corr.length + f];
    return out;
}

template <typename T>
FeatureMap<T> soft_argmax_offsets(const CorrFeatures<T>& corr, int radius) {
    const int win = 2 * radius + 1;
    const int win2 = win * win;
    if (corr.length < win2)
        throw DimensionError("soft_argmax_offsets: window exceeds feature length");
    FeatureMap<T> sa(2, corr.height, corr.width);
    const T sharp = static_cast<T>(kSoftArgmaxSharpness);
    const size_t cells = static_cast<size_t>(corr.height) * corr.width;
    std::vector<T> p(win2);
    for (size_t cell = 0; cell < cells; ++cell) {
        const T* c = corr.data.data() + cell * corr.length;
        T m = c[0];
        for (int f = 1; f < win2; ++f) m = std::max(m, c[f]);
        T sum = T(0);
        for (int f = 0; f < win2; ++f) {
            p[f] = std::exp(sharp * (c[f] - m));
            sum += p[f];
        }
        T ex = T(0), ey = T(0);
        for (int f = 0; f < win2; ++f) {
            const T q = p[f] / sum;
            ex += q * static_cast<T>(f % win - radius);
            ey += q * static_cast<T>(f / win - radius);
        }
        sa.data[cell] = ex;
        sa.data[cells + cell] = ey;
    }
    return sa;
}

namespace {

// adjoint of soft_argmax_offsets, accumulated into the feature gradient
template <typename T>
void soft_argmax_backward(const CorrFeatures<T>& corr, int radius,
                          const FeatureMap<T>& sa, const FeatureMap<T>& grad_sa,
                          CorrFeatures<T>& grad_corr) {
    const int win = 2 * radius + 1;
    const int win2 = win * win;
    const T sharp = static_cast<T>(kSoftArgmaxSharpness);
    const size_t cells = static_cast<size_t>(corr.height) * corr.width;
    std::vector<T> p(win2);
    for (size_t cell = 0; cell < cells; ++cell) {
        const T* c = corr.data.data() + cell * corr.length;
        T m = c[0];
        for (int f = 1; f < win2; ++f) m = std::max(m, c[f]);
        T sum = T(0);
        for (int f = 0; f < win2; ++f) {
            p[f] = std::exp(sharp * (c[f] - m));
            sum += p[f];
        }
        const T ex = sa.data[cell];
        const T ey = sa.data[cells + cell];
        const T gx = grad_sa.data[cell];
        const T gy = grad_sa.data[cells + cell];
        T* gc = grad_corr.data.data() + cell * grad_corr.length;
        for (int f = 0; f < win2; ++f) {
            const T q = p[f] / sum;
            const T dx = static_cast<T>(f % win - radius);
            const T dy = static_cast<T>(f / win - radius);
            gc[f] += sharp * q * ((dx - ex) * gx + (dy - ey) * gy);
        }
    }
}

}  // namespace

template <typename T>
void gru_step(const GruWeights<T>& w, const GRUState<T>& state,
              const CorrFeatures<T>& corr, const FeatureMap<T>& inp,
              const FlowField<T>& flow, int radius, GRUState<T>& state_out,
              FlowField<T>& flow_out, GruStepTrace<T>* trace) {
    const FeatureMap<T>& h = state.hidden;
    if (corr.height != h.height || corr.width != h.width ||
        inp.height != h.height || inp.width != h.width ||
        flow.height != h.height || flow.width != h.width)
        throw DimensionError("gru_step: grid dims disagree");

    FeatureMap<T> corr_map = corr_to_fmap(corr);
    FeatureMap<T> sa = soft_argmax_offsets(corr, radius);
    FeatureMap<T> flow_map = flow_to_fmap(flow);
    FeatureMap<T> hx = concat_channels<T>({&h, &corr_map, &sa, &inp, &flow_map});
    FeatureMap<T> z = map_sigmoid(conv_forward(w.wz, hx));
    FeatureMap<T> r = map_sigmoid(conv_forward(w.wr, hx));

    FeatureMap<T> rh(h.channels, h.height, h.width);
    for (size_t n = 0; n < rh.data.size(); ++n)
        rh.data[n] = r.data[n] * h.data[n];
    FeatureMap<T> rhx = rh;
    {
        // reuse the x part of hx rather than re-concatenating
        FeatureMap<T> full(hx.channels, hx.height, hx.width);
        std::copy(rh.data.begin(), rh.data.end(), full.data.begin());
        std::copy(hx.data.begin() + rh.data.size(), hx.data.end(),
                  full.data.begin() + rh.data.size());
        rhx = std::move(full);
    }
    FeatureMap<T> cand = map_tanh(conv_forward(w.wh, rhx));

    FeatureMap<T> h_new(h.channels, h.height, h.width);
    for (size_t n = 0; n < h_new.data.size(); ++n)
        h_new.data[n] = (T(1) - z.data[n]) * h.data[n] + z.data[n] * cand.data[n];
    clamp_open_unit(h_new);

    FeatureMap<T> head_in = concat_channels<T>({&h_new, &sa});
    FeatureMap<T> delta = conv_forward(w.flow_head, head_in);
    flow_out = flow;
    add_fmap_to_flow(delta, 0, flow_out);

    if (trace) {
        trace->hidden_in = h;
        trace->hx = std::move(hx);
        trace->rhx = std::move(rhx);
        trace->z = z;
        trace->r = r;
        trace->cand = cand;
        trace->hidden_out = h_new;
        trace->head_in = std::move(head_in);
        trace->sa = std::move(sa);
        trace->corr = corr;
        trace->flow_in = flow;
        trace->radius = radius;
    }
    state_out.hidden = std::move(h_new);
}

template <typename T>
GruStepGrads<T> gru_step_backward(const GruWeights<T>& w,
                                  const GruStepTrace<T>& trace,
                                  const FeatureMap<T>& grad_hidden_out,
                                  const FlowField<T>& grad_flow_out,
                                  GruWeights<T>& wg) {
    const int t = trace.hidden_in.channels;
    const int total_ch = trace.hx.channels;
    const int h = trace.hidden_in.height;
    const int wd = trace.hidden_in.width;
    const size_t ps = trace.hidden_in.plane_size();

    // flow' = flow + head([h' | sa])
    FeatureMap<T> grad_delta = flow_to_fmap(grad_flow_out);
    FeatureMap<T> grad_head_in(t + 2, h, wd);
    conv_backward(w.flow_head, trace.head_in, grad_delta, &grad_head_in,
                  &wg.flow_head.weight, &wg.flow_head.bias);
    FeatureMap<T> grad_hnew = grad_hidden_out;
    add_channels(grad_head_in, 0, grad_hnew);
    FeatureMap<T> grad_sa(2, h, wd);
    add_channels(grad_head_in, t, grad_sa);

    // h' = (1-z) h + z cand
    FeatureMap<T> gz(t, h, wd), gcand(t, h, wd), gh(t, h, wd);
    for (size_t n = 0; n < grad_hnew.data.size(); ++n) {
        const T g = grad_hnew.data[n];
        gz.data[n] = g * (trace.cand.data[n] - trace.hidden_in.data[n]);
        gcand.data[n] = g * trace.z.data[n];
        gh.data[n] = g * (T(1) - trace.z.data[n]);
    }

    // cand = tanh(wh * rhx)
    FeatureMap<T> graw_h(t, h, wd);
    for (size_t n = 0; n < gcand.data.size(); ++n)
        graw_h.data[n] =
            gcand.data[n] * (T(1) - trace.cand.data[n] * trace.cand.data[n]);
    FeatureMap<T> grhx(total_ch, h, wd);
    conv_backward(w.wh, trace.rhx, graw_h, &grhx, &wg.wh.weight, &wg.wh.bias);

    // rhx = [r . h | x]
    FeatureMap<T> gr(t, h, wd);
    for (int c = 0; c < t; ++c) {
        const T* grh = grhx.plane(c);
        T* grc = gr.plane(c);
        T* ghc = gh.plane(c);
        const T* rr = trace.r.plane(c);
        const T* hh = trace.hidden_in.plane(c);
        for (size_t n = 0; n < ps; ++n) {
            grc[n] = grh[n] * hh[n];
            ghc[n] += grh[n] * rr[n];
        }
    }

    // z and r through their logistic pre-activations
    FeatureMap<T> graw_z(t, h, wd), graw_r(t, h, wd);
    for (size_t n = 0; n < gz.data.size(); ++n) {
        graw_z.data[n] =
            gz.data[n] * trace.z.data[n] * (T(1) - trace.z.data[n]);
        graw_r.data[n] =
            gr.data[n] * trace.r.data[n] * (T(1) - trace.r.data[n]);
    }
    FeatureMap<T> ghx(total_ch, h, wd);
    conv_backward(w.wz, trace.hx, graw_z, &ghx, &wg.wz.weight, &wg.wz.bias);
    conv_backward(w.wr, trace.hx, graw_r, &ghx, &wg.wr.weight, &wg.wr.bias);

    // gather the x slice [corr | sa | inp | flow] from both conv inputs
    const int corr_len = trace.corr.length;
    GruStepGrads<T> out;
    out.hidden_in = std::move(gh);
    add_channels(ghx, 0, out.hidden_in);

    FeatureMap<T> gx(total_ch - t, h, wd);
    add_channels(ghx, t, gx);
    add_channels(grhx, t, gx);

    out.corr = CorrFeatures<T>(h, wd, corr_len);
    const size_t cells = ps;
    for (int f = 0; f < corr_len; ++f) {
        const T* src = gx.plane(f);
        for (size_t cell = 0; cell < cells; ++cell)
            out.corr.data[cell * corr_len + f] = src[cell];
    }
    add_channels(gx, corr_len, grad_sa);
    soft_argmax_backward(trace.corr, trace.radius, trace.sa, grad_sa, out.corr);

    out.inp = FeatureMap<T>(t, h, wd);
    add_channels(gx, corr_len + 2, out.inp);
    out.flow_in = grad_flow_out;  // identity branch of flow' = flow + delta
    add_fmap_to_flow(gx, corr_len + 2 + t, out.flow_in);
    return out;
}

template <typename T>
void lookup_backward(const CorrPyramid<T>& p, const FlowField<T>& flow,
                     const LookupConfig& cfg, const CorrFeatures<T>& grad_feat,
                     std::vector<CorrVolume4<T>>& grad_levels,
                     FlowField<T>& grad_flow) {
    const CorrVolume4<T>& base = p.levels.at(0);
    const int r = cfg.radius;
    for (int y = 0; y < base.h1; ++y) {
        for (int x = 0; x < base.w1; ++x) {
            const T cx = static_cast<T>(x) + flow.u_at(x, y);
            const T cy = static_cast<T>(y) + flow.v_at(x, y);
            const T* gsrc =
                grad_feat.data.data() +
                (static_cast<size_t>(y) * base.w1 + x) * grad_feat.length;
            int f = 0;
            T du = T(0), dv = T(0);
            for (int t = 0; t < cfg.num_levels; ++t) {
                const CorrVolume4<T>& lvl = p.levels[t];
                const T* plane = lvl.plane(x, y);
                T* gplane = grad_levels[t].plane(x, y);
                const T scale = T(1) / static_cast<T>(1 << t);
                const T px = cx * scale;
                const T py = cy * scale;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        const T g = gsrc[f++];
                        if (g == T(0)) continue;
                        const auto taps =
                            bilinear_taps(lvl.h2, lvl.w2, px + static_cast<T>(dx),
                                          py + static_cast<T>(dy));
                        for (int n = 0; n < taps.count; ++n) {
                            gplane[taps.idx[n]] += g * taps.weight[n];
                            du += g * taps.dwdx[n] * plane[taps.idx[n]] * scale;
                            dv += g * taps.dwdy[n] * plane[taps.idx[n]] * scale;
                        }
                    }
                }
            }
            grad_flow.u_at(x, y) += du;
            grad_flow.v_at(x, y) += dv;
        }
    }
}

template <typename T>
CorrVolume4<T> avg_pool_target_backward(const CorrVolume4<T>& grad_out, int h2,
                                        int w2) {
    CorrVolume4<T> grad_in(grad_out.h1, grad_out.w1, h2, w2);
    const size_t out_ps = grad_out.plane_size();
    const size_t in_ps = grad_in.plane_size();
    for (size_t p = 0; p < grad_out.num_planes(); ++p) {
        const T* src = grad_out.data.data() + p * out_ps;
        T* dst = grad_in.data.data() + p * in_ps;
        for (int y = 0; y < grad_out.h2; ++y)
            for (int x = 0; x < grad_out.w2; ++x) {
                const T g = src[static_cast<size_t>(y) * grad_out.w2 + x] * T(0.25);
                T* r0 = dst + static_cast<size_t>(2 * y) * w2 + 2 * x;
                T* r1 = r0 + w2;
                r0[0] += g;
                r0[1] += g;
                r1[0] += g;
                r1[1] += g;
            }
    }
    return grad_in;
}

template <typename T>
std::vector<FlowField<T>> model_forward(const ImagePair<T>& pair,
                                        const Model<T>& model, int iterations,
                                        ModelTrace<T>* trace,
                                        const FlowField<T>* init_flow) {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    FeatureMap<T> g1 = encode_matching(pair.reference, model.match_enc,
                                       trace ? &trace->enc_g1 : nullptr);
    FeatureMap<T> g2 = encode_matching(pair.target, model.match_enc,
                                       trace ? &trace->enc_g2 : nullptr);
    ContextBundle<T> ctx =
        encode_context(pair, model.ctx_enc, trace ? &trace->enc_c1 : nullptr,
                       trace ? &trace->enc_c2 : nullptr);

    CorrVolume4<T> c = build_all_pairs(g1, g2);
    CorrVolume4<T> v;
    AssembleState<T> astate;
    if (trace)
        v = assemble_with_state(c, g1, g2, ctx, model.gate, astate);
    else
        v = assemble(c, ctx, model.gate);
    CorrPyramid<T> pyramid = build_pyramid(v, model.cfg.levels);

    GRUState<T> state;
    FlowField<T> flow;
    init_state(ctx, state, flow);
    if (init_flow) {
        if (init_flow->height != flow.height || init_flow->width != flow.width)
            throw DimensionError("model_forward: init flow dims mismatch");
        flow = *init_flow;
    }

    const LookupConfig lcfg = model.cfg.lookup();
    std::vector<FlowField<T>> flows;
    flows.reserve(iterations);
    if (trace) trace->steps.resize(iterations);
    for (int i = 0; i < iterations; ++i) {
        CorrFeatures<T> corr = lookup(pyramid, flow, lcfg);
        GRUState<T> next;
        FlowField<T> flow_next;
        gru_step(model.gru, state, corr, ctx.inp1, flow, lcfg.radius, next,
                 flow_next, trace ? &trace->steps[i] : nullptr);
        state = std::move(next);
        flow = std::move(flow_next);
        flows.push_back(flow);
    }

    if (trace) {
        trace->g1 = std::move(g1);
        trace->g2 = std::move(g2);
        trace->ctx = std::move(ctx);
        trace->assemble_state = std::move(astate);
        trace->pyramid = std::move(pyramid);
    }
    return flows;
}

template <typename T>
Model<T> model_backward(const Model<T>& model, const ModelTrace<T>& trace,
                        const std::vector<FlowField<T>>& grad_flows) {
    const int iterations = static_cast<int>(trace.steps.size());
    if (static_cast<int>(grad_flows.size()) != iterations)
        throw DimensionError("model_backward: one flow gradient per iteration");
    Model<T> grads = make_zero_like(model);
    const int t = model.cfg.net_channels();
    const int gh = trace.ctx.net1.height;
    const int gw = trace.ctx.net1.width;
    const LookupConfig lcfg = model.cfg.lookup();

    std::vector<CorrVolume4<T>> grad_levels;
    grad_levels.reserve(trace.pyramid.num_levels());
    for (const auto& lvl : trace.pyramid.levels)
        grad_levels.emplace_back(lvl.h1, lvl.w1, lvl.h2, lvl.w2);

    FeatureMap<T> grad_hidden(t, gh, gw);
    FlowField<T> grad_flow(gh, gw);
    FeatureMap<T> grad_inp1(t, gh, gw);

    for (int i = iterations - 1; i >= 0; --i) {
        FlowField<T> gf = grad_flow;
        for (size_t n = 0; n < gf.u.size(); ++n) {
            gf.u[n] += grad_flows[i].u[n];
            gf.v[n] += grad_flows[i].v[n];
        }
        GruStepGrads<T> sg = gru_step_backward(model.gru, trace.steps[i],
                                               grad_hidden, gf, grads.gru);
        lookup_backward(trace.pyramid, trace.steps[i].flow_in, lcfg, sg.corr,
                        grad_levels, sg.flow_in);
        grad_hidden = std::move(sg.hidden_in);
        grad_flow = std::move(sg.flow_in);
        for (size_t n = 0; n < grad_inp1.data.size(); ++n)
            grad_inp1.data[n] += sg.inp.data[n];
    }

    // hidden0 = tanh(net1)
    const FeatureMap<T>& h0 = trace.steps[0].hidden_in;
    FeatureMap<T> grad_net1(t, gh, gw);
    for (size_t n = 0; n < grad_net1.data.size(); ++n)
        grad_net1.data[n] =
            grad_hidden.data[n] * (T(1) - h0.data[n] * h0.data[n]);

    // collapse level gradients onto the level-0 volume
    for (int lv = trace.pyramid.num_levels() - 1; lv >= 1; --lv) {
        CorrVolume4<T> up = avg_pool_target_backward(
            grad_levels[lv], trace.pyramid.levels[lv - 1].h2,
            trace.pyramid.levels[lv - 1].w2);
        for (size_t n = 0; n < up.data.size(); ++n)
            grad_levels[lv - 1].data[n] += up.data[n];
    }

    AssembleGrads<T> ag = backward_assemble(grad_levels[0], trace.assemble_state);
    for (size_t n = 0; n < ag.wq.size(); ++n) grads.gate.wq[n] += ag.wq[n];
    for (size_t n = 0; n < ag.wk.size(); ++n) grads.gate.wk[n] += ag.wk[n];
    grads.gate.lambda += ag.lambda;
    for (size_t n = 0; n < grad_net1.data.size(); ++n)
        grad_net1.data[n] += ag.net1.data[n];

    // context encoder: frame-1 grads on [net|inp], frame-2 only on net
    FeatureMap<T> zero_inp2(t, gh, gw);
    FeatureMap<T> gc1 = concat_channels<T>({&grad_net1, &grad_inp1});
    FeatureMap<T> gc2 = concat_channels<T>({&ag.net2, &zero_inp2});
    encoder_backward(model.ctx_enc, trace.enc_c1, gc1, grads.ctx_enc);
    encoder_backward(model.ctx_enc, trace.enc_c2, gc2, grads.ctx_enc);
    encoder_backward(model.match_enc, trace.enc_g1, ag.g1, grads.match_enc);
    encoder_backward(model.match_enc, trace.enc_g2, ag.g2, grads.match_enc);
    return grads;
}

template <typename T>
FlowField<T> upsample_flow_x8(const FlowField<T>& coarse, int out_h, int out_w) {
    FlowField<T> out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        const T py = std::min(static_cast<T>(y) / T(8),
                              static_cast<T>(coarse.height - 1));
        const int y0 = static_cast<int>(py);
        const int y1 = std::min(y0 + 1, coarse.height - 1);
        const T fy = py - static_cast<T>(y0);
        for (int x = 0; x < out_w; ++x) {
            const T px = std::min(static_cast<T>(x) / T(8),
                                  static_cast<T>(coarse.width - 1));
            const int x0 = static_cast<int>(px);
            const int x1 = std::min(x0 + 1, coarse.width - 1);
            const T fx = px - static_cast<T>(x0);
            const T w00 = (T(1) - fx) * (T(1) - fy);
            const T w01 = fx * (T(1) - fy);
            const T w10 = (T(1) - fx) * fy;
            const T w11 = fx * fy;
            out.u_at(x, y) =
                T(8) * (w00 * coarse.u_at(x0, y0) + w01 * coarse.u_at(x1, y0) +
                        w10 * coarse.u_at(x0, y1) + w11 * coarse.u_at(x1, y1));
            out.v_at(x, y) =
                T(8) * (w00 * coarse.v_at(x0, y0) + w01 * coarse.v_at(x1, y0) +
                        w10 * coarse.v_at(x0, y1) + w11 * coarse.v_at(x1, y1));
        }
    }
    return out;
}

template <typename T>
FlowField<T> run_refinement(const FeatureMap<T>& g1, const FeatureMap<T>& g2,
                            const ContextBundle<T>& ctx, const Model<T>& model,
                            const RefineConfig& cfg, const PadRecord& pad,
                            int full_height, int full_width) {
    if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (cfg.hidden_channels != model.cfg.net_channels())
        throw DimensionError("run_refinement: hidden channels must equal t");

    CorrVolume4<T> c = build_all_pairs(g1, g2);
    CorrVolume4<T> v = assemble(c, ctx, model.gate);
    CorrPyramid<T> pyramid = build_pyramid(v, model.cfg.levels);

    GRUState<T> state;
    FlowField<T> flow;
    init_state(ctx, state, flow);
    const LookupConfig lcfg = model.cfg.lookup();
    for (int i = 0; i < cfg.iterations; ++i) {
        CorrFeatures<T> corr = lookup(pyramid, flow, lcfg);
        GRUState<T> next;
        FlowField<T> flow_next;
        gru_step(model.gru, state, corr, ctx.inp1, flow, lcfg.radius, next,
                 flow_next);
        state = std::move(next);
        flow = std::move(flow_next);
    }

    const int padded_h = flow.height * 8;
    const int padded_w = flow.width * 8;
    FlowField<T> full = upsample_flow_x8(flow, padded_h, padded_w);
    if (pad.empty() && full_height == padded_h && full_width == padded_w)
        return full;
    FlowField<T> cropped(full_height, full_width);
    for (int y = 0; y < full_height; ++y)
        for (int x = 0; x < full_width; ++x) {
            cropped.u_at(x, y) = full.u_at(x, y);
            cropped.v_at(x, y) = full.v_at(x, y);
        }
    return cropped;
}

#define CGCV_INSTANTIATE(T)                                                      \
    template void init_state<T>(const ContextBundle<T>&, GRUState<T>&,          \
                                FlowField<T>&);                                  \
    template FeatureMap<T> corr_to_fmap<T>(const CorrFeatures<T>&);             \
    template FeatureMap<T> soft_argmax_offsets<T>(const CorrFeatures<T>&, int); \
    template void gru_step<T>(const GruWeights<T>&, const GRUState<T>&,         \
                              const CorrFeatures<T>&, const FeatureMap<T>&,     \
                              const FlowField<T>&, int, GRUState<T>&,           \
                              FlowField<T>&, GruStepTrace<T>*);                  \
    template GruStepGrads<T> gru_step_backward<T>(                               \
        const GruWeights<T>&, const GruStepTrace<T>&, const FeatureMap<T>&,     \
        const FlowField<T>&, GruWeights<T>&);                                    \
    template void lookup_backward<T>(const CorrPyramid<T>&, const FlowField<T>&,\
                                     const LookupConfig&,                        \
                                     const CorrFeatures<T>&,                     \
                                     std::vector<CorrVolume4<T>>&,              \
                                     FlowField<T>&);                             \
    template CorrVolume4<T> avg_pool_target_backward<T>(const CorrVolume4<T>&,  \
                                                        int, int);              \
    template std::vector<FlowField<T>> model_forward<T>(                         \
        const ImagePair<T>&, const Model<T>&, int, ModelTrace<T>*,              \
        const FlowField<T>*);                                                    \
    template Model<T> model_backward<T>(const Model<T>&, const ModelTrace<T>&,  \
                                        const std::vector<FlowField<T>>&);      \
    template FlowField<T> upsample_flow_x8<T>(const FlowField<T>&, int, int);   \
    template FlowField<T> run_refinement<T>(                                     \
        const FeatureMap<T>&, const FeatureMap<T>&, const ContextBundle<T>&,    \
        const Model<T>&, const RefineConfig&, const PadRecord&, int, int);

CGCV_INSTANTIATE(float)
CGCV_INSTANTIATE(double)
#undef CGCV_INSTANTIATE

}  // namespace cgcv
