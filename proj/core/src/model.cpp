#include "cgcv/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cgcv {

ModelConfig ModelConfig::toy() {
    ModelConfig cfg;
    cfg.match_channels = 16;
    cfg.context_channels = 24;
    cfg.qk_channels = 12;
    cfg.enc_hidden = {8, 12};
    cfg.enc_ksize = 2;  // cell-aligned receptive fields localize the volume
    cfg.radius = 2;
    cfg.levels = 2;
    cfg.iterations = 4;
    return cfg;
}

template <typename T>
Model<T> make_model(const ModelConfig& cfg) {
    if (cfg.context_channels % 2 != 0)
        throw ConfigError("context_channels must be even (net/inp split)");
    Model<T> m;
    m.cfg = cfg;
    const int t = cfg.net_channels();

    EncoderConfig ec;
    ec.hidden = cfg.enc_hidden;
    ec.ksize = cfg.enc_ksize;
    ec.out_channels = cfg.match_channels;
    ec.seed = cfg.seed;
    m.match_enc = make_encoder<T>(ec);
    // correlation entries are quadratic in feature scale; a 2x output gain
    // keeps the sampled correlation features comparable to the context
    // channels that share the update-unit convolutions
    for (T& w : m.match_enc.conv3.weight) w *= T(2);
    ec.out_channels = cfg.context_channels;
    ec.seed = cfg.seed + 1;
    m.ctx_enc = make_encoder<T>(ec);

    m.gate.d = cfg.qk_channels;
    m.gate.t = t;
    m.gate.gate_mode = cfg.gate_mode;
    m.gate.lift_enabled = cfg.lift_enabled;
    m.gate.lambda = T(0);
    m.gate.wq.resize(static_cast<size_t>(cfg.qk_channels) * t);
    m.gate.wk.resize(static_cast<size_t>(cfg.qk_channels) * t);
    {
        // uniform in [-1/sqrt(t), 1/sqrt(t)] keeps initial gate logits near 0
        std::mt19937 rng(cfg.seed + 2);
        const double bound = 1.0 / std::sqrt(static_cast<double>(t));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (T& w : m.gate.wq) w = static_cast<T>(dist(rng));
        for (T& w : m.gate.wk) w = static_cast<T>(dist(rng));
    }

    // corr | soft-argmax | inp | flow
    const int x_ch = cfg.corr_length() + 2 + t + 2;
    m.gru.wz = ConvLayer<T>(t + x_ch, t, 3, 1, 1);
    m.gru.wr = ConvLayer<T>(t + x_ch, t, 3, 1, 1);
    m.gru.wh = ConvLayer<T>(t + x_ch, t, 3, 1, 1);
    m.gru.flow_head = ConvLayer<T>(t + 2, 2, 3, 1, 1);
    std::mt19937 rng(cfg.seed + 3);
    init_he_uniform(m.gru.wz, rng);
    init_he_uniform(m.gru.wr, rng);
    init_he_uniform(m.gru.wh, rng);
    init_he_uniform(m.gru.flow_head, rng);
    // damp the head so early iterates stay near the zero-flow lookup regime
    for (T& w : m.gru.flow_head.weight) w *= T(0.1);
    return m;
}

namespace {

template <typename T>
void add_conv(std::vector<ParamRef<T>>& out, const std::string& prefix,
              ConvLayer<T>& c) {
    out.push_back({prefix + ".weight", c.weight.data(), c.weight.size(),
                   {static_cast<uint32_t>(c.out_channels),
                    static_cast<uint32_t>(c.in_channels),
                    static_cast<uint32_t>(c.ksize),
                    static_cast<uint32_t>(c.ksize)}});
    out.push_back({prefix + ".bias", c.bias.data(), c.bias.size(),
                   {static_cast<uint32_t>(c.out_channels)}});
}

}  // namespace

template <typename T>
std::vector<ParamRef<T>> param_refs(Model<T>& m) {
    std::vector<ParamRef<T>> refs;
    add_conv(refs, "match_enc.conv1", m.match_enc.conv1);
    add_conv(refs, "match_enc.conv2", m.match_enc.conv2);
    add_conv(refs, "match_enc.conv3", m.match_enc.conv3);
    add_conv(refs, "ctx_enc.conv1", m.ctx_enc.conv1);
    add_conv(refs, "ctx_enc.conv2", m.ctx_enc.conv2);
    add_conv(refs, "ctx_enc.conv3", m.ctx_enc.conv3);
    refs.push_back({"gate.wq", m.gate.wq.data(), m.gate.wq.size(),
                    {static_cast<uint32_t>(m.gate.d),
                     static_cast<uint32_t>(m.gate.t)}});
    refs.push_back({"gate.wk", m.gate.wk.data(), m.gate.wk.size(),
                    {static_cast<uint32_t>(m.gate.d),
                     static_cast<uint32_t>(m.gate.t)}});
    refs.push_back({"gate.lambda", &m.gate.lambda, 1, {1}});
    add_conv(refs, "gru.wz", m.gru.wz);
    add_conv(refs, "gru.wr", m.gru.wr);
    add_conv(refs, "gru.wh", m.gru.wh);
    add_conv(refs, "gru.flow_head", m.gru.flow_head);
    return refs;
}

template <typename T>
Model<T> make_zero_like(const Model<T>& m) {
    Model<T> z = m;
    auto refs = param_refs(z);
    for (auto& r : refs) std::fill_n(r.data, r.size, T(0));
    return z;
}

template <typename T>
void axpy_params(Model<T>& m, Model<T>& grads, T alpha) {
    auto dst = param_refs(m);
    auto src = param_refs(grads);
    for (size_t i = 0; i < dst.size(); ++i)
        for (size_t n = 0; n < dst[i].size; ++n)
            dst[i].data[n] += alpha * src[i].data[n];
}

template <typename T>
void scale_params(Model<T>& m, T alpha) {
    for (auto& r : param_refs(m))
        for (size_t n = 0; n < r.size; ++n) r.data[n] *= alpha;
}

template <typename To, typename From>
FeatureMap<To> convert_map(const FeatureMap<From>& m) {
    FeatureMap<To> out(m.channels, m.height, m.width);
    for (size_t n = 0; n < m.data.size(); ++n)
        out.data[n] = static_cast<To>(m.data[n]);
    return out;
}

template <typename To, typename From>
FlowField<To> convert_flow(const FlowField<From>& f) {
    FlowField<To> out(f.height, f.width);
    for (size_t n = 0; n < f.u.size(); ++n) {
        out.u[n] = static_cast<To>(f.u[n]);
        out.v[n] = static_cast<To>(f.v[n]);
    }
    return out;
}

template <typename To, typename From>
Model<To> convert_model(const Model<From>& m) {
    Model<To> out = make_model<To>(m.cfg);
    auto src = param_refs(const_cast<Model<From>&>(m));
    auto dst = param_refs(out);
    for (size_t i = 0; i < src.size(); ++i)
        for (size_t n = 0; n < src[i].size; ++n)
            dst[i].data[n] = static_cast<To>(src[i].data[n]);
    return out;
}

#define CGCV_INSTANTIATE(T)                                                \
    template Model<T> make_model<T>(const ModelConfig&);                   \
    template std::vector<ParamRef<T>> param_refs<T>(Model<T>&);            \
    template Model<T> make_zero_like<T>(const Model<T>&);                  \
    template void axpy_params<T>(Model<T>&, Model<T>&, T);                 \
    template void scale_params<T>(Model<T>&, T);

CGCV_INSTANTIATE(float)
CGCV_INSTANTIATE(double)
#undef CGCV_INSTANTIATE

template Model<float> convert_model<float, double>(const Model<double>&);
template Model<double> convert_model<double, float>(const Model<float>&);
template Model<float> convert_model<float, float>(const Model<float>&);
template Model<double> convert_model<double, double>(const Model<double>&);
template FeatureMap<float> convert_map<float, double>(const FeatureMap<double>&);
template FeatureMap<double> convert_map<double, float>(const FeatureMap<float>&);
template FlowField<float> convert_flow<float, double>(const FlowField<double>&);
template FlowField<double> convert_flow<double, float>(const FlowField<float>&);

}  // namespace cgcv
