#include "cgcv/corr.hpp"

#include <cmath>
#include <string>

#include "cgcv/counters.hpp"

namespace cgcv {

namespace detail {

// Pixel-major copy of a channel-outer map so per-pixel feature vectors are
// contiguous for the dot-product sweep.
template <typename T>
static std::vector<T> to_pixel_major(const FeatureMap<T>& m) {
    std::vector<T> out(m.size());
    const size_t ps = m.plane_size();
    for (int c = 0; c < m.channels; ++c) {
        const T* src = m.plane(c);
        for (size_t p = 0; p < ps; ++p) out[p * m.channels + c] = src[p];
    }
    return out;
}

template <typename T>
CorrVolume4<T> all_pairs_scaled(const FeatureMap<T>& a, const FeatureMap<T>& b,
                                T scale) {
    if (a.channels != b.channels)
        throw DimensionError("all_pairs: channel mismatch (" +
                             std::to_string(a.channels) + " vs " +
                             std::to_string(b.channels) + ")");
    const int n = a.channels;
    CorrVolume4<T> out(a.height, a.width, b.height, b.width);
    const std::vector<T> av = to_pixel_major(a);
    const std::vector<T> bv = to_pixel_major(b);
    const size_t tgt_cells = out.plane_size();
    parallel_for(out.num_planes(), 16, [&](size_t lo, size_t hi) {
        for (size_t p = lo; p < hi; ++p) {
            const T* va = av.data() + p * n;
            T* dst = out.data.data() + p * tgt_cells;
            for (size_t q = 0; q < tgt_cells; ++q) {
                const T* vb = bv.data() + q * n;
                T acc = T(0);
                for (int c = 0; c < n; ++c) acc += va[c] * vb[c];
                dst[q] = scale * acc;
            }
        }
    });
    return out;
}

template CorrVolume4<float> all_pairs_scaled<float>(const FeatureMap<float>&,
                                                    const FeatureMap<float>&,
                                                    float);
template CorrVolume4<double> all_pairs_scaled<double>(const FeatureMap<double>&,
                                                      const FeatureMap<double>&,
                                                      double);

}  // namespace detail

template <typename T>
CorrVolume4<T> build_all_pairs(const FeatureMap<T>& g1, const FeatureMap<T>& g2) {
    counters::detail::bump_build_all_pairs();
    const T scale = T(1) / std::sqrt(static_cast<T>(g1.channels));
    return detail::all_pairs_scaled(g1, g2, scale);
}

template <typename T>
CorrPyramid<T> build_pyramid(const CorrVolume4<T>& v, int num_levels) {
    if (num_levels < 1)
        throw DimensionError("build_pyramid: num_levels must be >= 1");
    const int div = 1 << (num_levels - 1);
    if (v.h2 % div != 0 || v.w2 % div != 0)
        throw DimensionError("build_pyramid: target dims " +
                             std::to_string(v.w2) + "x" + std::to_string(v.h2) +
                             " not divisible by 2^" +
                             std::to_string(num_levels - 1));
    CorrPyramid<T> p;
    p.levels.reserve(num_levels);
    p.levels.push_back(v);
    for (int t = 1; t < num_levels; ++t)
        p.levels.push_back(avg_pool_target(p.levels.back()));
    return p;
}

template <typename T>
CorrFeatures<T> lookup(const CorrPyramid<T>& p, const FlowField<T>& flow,
                       const LookupConfig& cfg) {
    const CorrVolume4<T>& base = p.levels.at(0);
    if (flow.height != base.h1 || flow.width != base.w1)
        throw DimensionError("lookup: flow dims do not match reference grid");
    if (cfg.num_levels != p.num_levels())
        throw DimensionError("lookup: config levels do not match pyramid depth");
    const int r = cfg.radius;
    CorrFeatures<T> out(base.h1, base.w1, cfg.feature_length());
    detail::parallel_for(
        static_cast<size_t>(base.h1) * base.w1, 32, [&](size_t lo, size_t hi) {
            for (size_t cell = lo; cell < hi; ++cell) {
                const int y = static_cast<int>(cell) / base.w1;
                const int x = static_cast<int>(cell) % base.w1;
                const T cx = static_cast<T>(x) + flow.u_at(x, y);
                const T cy = static_cast<T>(y) + flow.v_at(x, y);
                T* dst = out.data.data() + cell * out.length;
                int f = 0;
                for (int t = 0; t < cfg.num_levels; ++t) {
                    const CorrVolume4<T>& lvl = p.levels[t];
                    const std::span<const T> plane(lvl.plane(x, y),
                                                   lvl.plane_size());
                    const T scale = T(1) / static_cast<T>(1 << t);
                    const T px = cx * scale;
                    const T py = cy * scale;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx)
                            dst[f++] = bilinear_sample_plane(
                                plane, lvl.h2, lvl.w2, px + static_cast<T>(dx),
                                py + static_cast<T>(dy));
                }
            }
        });
    return out;
}

template <typename T>
std::pair<int, int> argmax_plane(const CorrVolume4<T>& v, int i, int j) {
    if (i < 0 || i >= v.w1 || j < 0 || j >= v.h1)
        throw ContractViolation("argmax_plane: reference index out of range");
    const T* plane = v.plane(i, j);
    size_t best = 0;
    for (size_t n = 1; n < v.plane_size(); ++n)
        if (plane[n] > plane[best]) best = n;
    return {static_cast<int>(best % v.w2), static_cast<int>(best / v.w2)};
}

#define CGCV_INSTANTIATE(T)                                                      \
    template CorrVolume4<T> build_all_pairs<T>(const FeatureMap<T>&,            \
                                               const FeatureMap<T>&);           \
    template CorrPyramid<T> build_pyramid<T>(const CorrVolume4<T>&, int);       \
    template CorrFeatures<T> lookup<T>(const CorrPyramid<T>&,                   \
                                       const FlowField<T>&,                     \
                                       const LookupConfig&);                    \
    template std::pair<int, int> argmax_plane<T>(const CorrVolume4<T>&, int,    \
                                                 int);

CGCV_INSTANTIATE(float)
CGCV_INSTANTIATE(double)
#undef CGCV_INSTANTIATE

}  // namespace cgcv
