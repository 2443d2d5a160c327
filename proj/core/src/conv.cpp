#include "cgcv/conv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cgcv {

template <typename T>
void init_he_uniform(ConvLayer<T>& layer, std::mt19937& rng) {
    const double fan_in =
        static_cast<double>(layer.in_channels) * layer.ksize * layer.ksize;
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& w : layer.weight) w = static_cast<T>(dist(rng));
    // mean-free filters reject the constant mode of their input patch, so
    // untrained features decorrelate across cells instead of sharing a DC
    const size_t per_filter = static_cast<size_t>(layer.in_channels) *
                              layer.ksize * layer.ksize;
    for (int oc = 0; oc < layer.out_channels; ++oc) {
        T* w = layer.weight.data() + static_cast<size_t>(oc) * per_filter;
        T mean = T(0);
        for (size_t n = 0; n < per_filter; ++n) mean += w[n];
        mean /= static_cast<T>(per_filter);
        for (size_t n = 0; n < per_filter; ++n) w[n] -= mean;
    }
    for (T& b : layer.bias) b = T(0);
}

template <typename T>
FeatureMap<T> conv_forward(const ConvLayer<T>& layer, const FeatureMap<T>& in) {
    if (in.channels != layer.in_channels)
        throw DimensionError("conv_forward: expected " +
                             std::to_string(layer.in_channels) +
                             " input channels, got " +
                             std::to_string(in.channels));
    const int oh = layer.out_dim(in.height);
    const int ow = layer.out_dim(in.width);
    if (oh <= 0 || ow <= 0)
        throw DimensionError("conv_forward: input smaller than kernel");
    FeatureMap<T> out(layer.out_channels, oh, ow);
    const int k = layer.ksize;
    for (int oc = 0; oc < layer.out_channels; ++oc) {
        T* dst = out.plane(oc);
        const T* woc =
            layer.weight.data() + static_cast<size_t>(oc) * in.channels * k * k;
        const T b = layer.bias[oc];
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                T acc = b;
                const int iy0 = oy * layer.stride - layer.pad;
                const int ix0 = ox * layer.stride - layer.pad;
                for (int ic = 0; ic < in.channels; ++ic) {
                    const T* src = in.plane(ic);
                    const T* wic = woc + static_cast<size_t>(ic) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= in.height) continue;
                        const T* row = src + static_cast<size_t>(iy) * in.width;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ix0 + kx;
                            if (ix < 0 || ix >= in.width) continue;
                            acc += wic[ky * k + kx] * row[ix];
                        }
                    }
                }
                dst[static_cast<size_t>(oy) * ow + ox] = acc;
            }
        }
    }
    return out;
}

template <typename T>
void conv_backward(const ConvLayer<T>& layer, const FeatureMap<T>& in,
                   const FeatureMap<T>& grad_out, FeatureMap<T>* grad_in,
                   std::vector<T>* grad_weight, std::vector<T>* grad_bias) {
    const int k = layer.ksize;
    const int oh = grad_out.height;
    const int ow = grad_out.width;
    for (int oc = 0; oc < layer.out_channels; ++oc) {
        const T* gout = grad_out.plane(oc);
        const T* woc =
            layer.weight.data() + static_cast<size_t>(oc) * in.channels * k * k;
        T* gwoc = grad_weight
                      ? grad_weight->data() +
                            static_cast<size_t>(oc) * in.channels * k * k
                      : nullptr;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const T g = gout[static_cast<size_t>(oy) * ow + ox];
                if (g == T(0)) continue;
                if (grad_bias) (*grad_bias)[oc] += g;
                const int iy0 = oy * layer.stride - layer.pad;
                const int ix0 = ox * layer.stride - layer.pad;
                for (int ic = 0; ic < in.channels; ++ic) {
                    const T* src = in.plane(ic);
                    T* gsrc = grad_in ? grad_in->plane(ic) : nullptr;
                    const T* wic = woc + static_cast<size_t>(ic) * k * k;
                    T* gwic = gwoc ? gwoc + static_cast<size_t>(ic) * k * k
                                   : nullptr;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= in.height) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ix0 + kx;
                            if (ix < 0 || ix >= in.width) continue;
                            const size_t at =
                                static_cast<size_t>(iy) * in.width + ix;
                            if (gwic) gwic[ky * k + kx] += g * src[at];
                            if (gsrc) gsrc[at] += g * wic[ky * k + kx];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
FeatureMap<T> relu(const FeatureMap<T>& in) {
    FeatureMap<T> out(in.channels, in.height, in.width);
    for (size_t n = 0; n < in.data.size(); ++n)
        out.data[n] = in.data[n] > T(0) ? in.data[n] : T(0);
    return out;
}

template <typename T>
FeatureMap<T> relu_backward(const FeatureMap<T>& in,
                            const FeatureMap<T>& grad_out) {
    FeatureMap<T> g(in.channels, in.height, in.width);
    for (size_t n = 0; n < in.data.size(); ++n)
        g.data[n] = in.data[n] > T(0) ? grad_out.data[n] : T(0);
    return g;
}

template <typename T>
FeatureMap<T> map_tanh(const FeatureMap<T>& in) {
    FeatureMap<T> out(in.channels, in.height, in.width);
    for (size_t n = 0; n < in.data.size(); ++n) out.data[n] = std::tanh(in.data[n]);
    return out;
}

template <typename T>
FeatureMap<T> map_sigmoid(const FeatureMap<T>& in) {
    FeatureMap<T> out(in.channels, in.height, in.width);
    for (size_t n = 0; n < in.data.size(); ++n)
        out.data[n] = stable_sigmoid(in.data[n]);
    return out;
}

template <typename T>
FeatureMap<T> concat_channels(const std::vector<const FeatureMap<T>*>& parts) {
    int ch = 0;
    for (const auto* p : parts) {
        if (p->height != parts[0]->height || p->width != parts[0]->width)
            throw DimensionError("concat_channels: spatial dims differ");
        ch += p->channels;
    }
    FeatureMap<T> out(ch, parts[0]->height, parts[0]->width);
    size_t off = 0;
    for (const auto* p : parts) {
        std::copy(p->data.begin(), p->data.end(), out.data.begin() + off);
        off += p->data.size();
    }
    return out;
}

#define CGCV_INSTANTIATE(T)                                                     \
    template void init_he_uniform<T>(ConvLayer<T>&, std::mt19937&);            \
    template FeatureMap<T> conv_forward<T>(const ConvLayer<T>&,                \
                                           const FeatureMap<T>&);              \
    template void conv_backward<T>(const ConvLayer<T>&, const FeatureMap<T>&,  \
                                   const FeatureMap<T>&, FeatureMap<T>*,       \
                                   std::vector<T>*, std::vector<T>*);          \
    template FeatureMap<T> relu<T>(const FeatureMap<T>&);                      \
    template FeatureMap<T> relu_backward<T>(const FeatureMap<T>&,              \
                                            const FeatureMap<T>&);             \
    template FeatureMap<T> map_tanh<T>(const FeatureMap<T>&);                  \
    template FeatureMap<T> map_sigmoid<T>(const FeatureMap<T>&);               \
    template FeatureMap<T> concat_channels<T>(                                 \
        const std::vector<const FeatureMap<T>*>&);

CGCV_INSTANTIATE(float)
CGCV_INSTANTIATE(double)
#undef CGCV_INSTANTIATE

}  // namespace cgcv
