#include "cgcv/encoder.hpp"

#include <algorithm>
#include <string>

namespace cgcv {

template <typename T>
EncoderWeights<T> make_encoder(const EncoderConfig& cfg, int in_channels) {
    EncoderWeights<T> w;
    const int k = cfg.ksize;
    const int p = k % 2 == 0 ? 0 : k / 2;  // even kernels tile exactly
    w.conv1 = ConvLayer<T>(in_channels, cfg.hidden[0], k, 2, p);
    w.conv2 = ConvLayer<T>(cfg.hidden[0], cfg.hidden[1], k, 2, p);
    w.conv3 = ConvLayer<T>(cfg.hidden[1], cfg.out_channels, k, 2, p);
    std::mt19937 rng(cfg.seed);
    init_he_uniform(w.conv1, rng);
    init_he_uniform(w.conv2, rng);
    init_he_uniform(w.conv3, rng);
    return w;
}

template <typename T>
PaddedImage<T> pad_to_grid(const FeatureMap<T>& img) {
    PaddedImage<T> out;
    const int ph = (img.height + 7) / 8 * 8;
    const int pw = (img.width + 7) / 8 * 8;
    out.pad.right = pw - img.width;
    out.pad.bottom = ph - img.height;
    if (out.pad.empty()) {
        out.image = img;
        return out;
    }
    out.image = FeatureMap<T>(img.channels, ph, pw);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < ph; ++y) {
            const int sy = std::min(y, img.height - 1);
            for (int x = 0; x < pw; ++x)
                out.image.at(c, y, x) = img.at(c, sy, std::min(x, img.width - 1));
        }
    return out;
}

template <typename T>
FeatureMap<T> encode_matching(const FeatureMap<T>& img,
                              const EncoderWeights<T>& w,
                              EncoderTrace<T>* trace) {
    if (img.height % 8 != 0 || img.width % 8 != 0)
        throw DimensionError("encode: image dims must be multiples of 8 (" +
                             std::to_string(img.width) + "x" +
                             std::to_string(img.height) + ")");
    FeatureMap<T> pre1 = conv_forward(w.conv1, img);
    FeatureMap<T> act1 = relu(pre1);
    FeatureMap<T> pre2 = conv_forward(w.conv2, act1);
    FeatureMap<T> act2 = relu(pre2);
    FeatureMap<T> out = conv_forward(w.conv3, act2);
    if (trace) {
        trace->input = img;
        trace->pre1 = std::move(pre1);
        trace->act1 = std::move(act1);
        trace->pre2 = std::move(pre2);
        trace->act2 = std::move(act2);
    }
    return out;
}

template <typename T>
FeatureMap<T> split_channels(const FeatureMap<T>& m, int from, int count) {
    FeatureMap<T> out(count, m.height, m.width);
    std::copy_n(m.plane(from), out.data.size(), out.data.begin());
    return out;
}

template <typename T>
ContextBundle<T> encode_context(const ImagePair<T>& pair,
                                const EncoderWeights<T>& w,
                                EncoderTrace<T>* trace_ref,
                                EncoderTrace<T>* trace_tgt) {
    if (w.conv3.out_channels % 2 != 0)
        throw ConfigError("encode_context: context channel count must be even");
    const int half = w.conv3.out_channels / 2;
    FeatureMap<T> c1 = encode_matching(pair.reference, w, trace_ref);
    FeatureMap<T> c2 = encode_matching(pair.target, w, trace_tgt);
    ContextBundle<T> b;
    b.net1 = split_channels(c1, 0, half);
    b.inp1 = split_channels(c1, half, half);
    b.net2 = split_channels(c2, 0, half);
    b.inp2 = split_channels(c2, half, half);
    return b;
}

template <typename T>
void encoder_backward(const EncoderWeights<T>& w, const EncoderTrace<T>& trace,
                      const FeatureMap<T>& grad_out, EncoderWeights<T>& grads,
                      FeatureMap<T>* grad_input) {
    FeatureMap<T> gact2(trace.act2.channels, trace.act2.height, trace.act2.width);
    conv_backward(w.conv3, trace.act2, grad_out, &gact2, &grads.conv3.weight,
                  &grads.conv3.bias);
    FeatureMap<T> gpre2 = relu_backward(trace.pre2, gact2);
    FeatureMap<T> gact1(trace.act1.channels, trace.act1.height, trace.act1.width);
    conv_backward(w.conv2, trace.act1, gpre2, &gact1, &grads.conv2.weight,
                  &grads.conv2.bias);
    FeatureMap<T> gpre1 = relu_backward(trace.pre1, gact1);
    conv_backward(w.conv1, trace.input, gpre1, grad_input, &grads.conv1.weight,
                  &grads.conv1.bias);
}

#define CGCV_INSTANTIATE(T)                                                      \
    template EncoderWeights<T> make_encoder<T>(const EncoderConfig&, int);      \
    template PaddedImage<T> pad_to_grid<T>(const FeatureMap<T>&);               \
    template FeatureMap<T> encode_matching<T>(const FeatureMap<T>&,             \
                                              const EncoderWeights<T>&,         \
                                              EncoderTrace<T>*);                \
    template FeatureMap<T> split_channels<T>(const FeatureMap<T>&, int, int);   \
    template ContextBundle<T> encode_context<T>(const ImagePair<T>&,            \
                                                const EncoderWeights<T>&,       \
                                                EncoderTrace<T>*,               \
                                                EncoderTrace<T>*);              \
    template void encoder_backward<T>(const EncoderWeights<T>&,                 \
                                      const EncoderTrace<T>&,                   \
                                      const FeatureMap<T>&, EncoderWeights<T>&, \
                                      FeatureMap<T>*);

CGCV_INSTANTIATE(float)
CGCV_INSTANTIATE(double)
#undef CGCV_INSTANTIATE

}  // namespace cgcv
