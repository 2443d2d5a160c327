#include "cgcv/tensor.hpp"

#include <algorithm>
#include <limits>
#include <thread>

namespace cgcv {

namespace detail {

void parallel_for(size_t n, size_t grain,
                  const std::function<void(size_t, size_t)>& body) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (n <= grain || hw == 1) {
        body(0, n);
        return;
    }
    const size_t num_workers = std::min<size_t>(hw, (n + grain - 1) / grain);
    const size_t chunk = (n + num_workers - 1) / num_workers;
    std::vector<std::thread> workers;
    workers.reserve(num_workers);
    for (size_t w = 0; w < num_workers; ++w) {
        const size_t lo = w * chunk;
        const size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : workers) t.join();
}

}  // namespace detail

template <typename T>
T inner_product(const FeatureMap<T>& a, const FeatureMap<T>& b, int i, int j,
                int k, int l, T scale) {
    if (a.channels != b.channels)
        throw DimensionError("inner_product: channel mismatch");
    if (i < 0 || i >= a.width || j < 0 || j >= a.height || k < 0 ||
        k >= b.width || l < 0 || l >= b.height)
        throw ContractViolation("inner_product: index out of range");
    T acc = T(0);
    for (int c = 0; c < a.channels; ++c) acc += a.at(c, j, i) * b.at(c, l, k);
    return scale * acc;
}

template <typename T>
T stable_sigmoid(T x) {
    T s;
    if (x >= T(0)) {
        s = T(1) / (T(1) + std::exp(-x));
    } else {
        const T e = std::exp(x);
        s = e / (T(1) + e);
    }
    // keep the contract output strictly inside (0, 1) even at saturation
    const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
    const T lo = std::numeric_limits<T>::min();
    return std::clamp(s, lo, hi);
}

template <typename T>
CorrVolume4<T> map_sigmoid(const CorrVolume4<T>& v) {
    CorrVolume4<T> out(v.h1, v.w1, v.h2, v.w2);
    for (size_t n = 0; n < v.data.size(); ++n)
        out.data[n] = stable_sigmoid(v.data[n]);
    return out;
}

template <typename T>
CorrVolume4<T> map_softmax_lastdims(const CorrVolume4<T>& v) {
    CorrVolume4<T> out(v.h1, v.w1, v.h2, v.w2);
    const size_t ps = v.plane_size();
    for (size_t p = 0; p < v.num_planes(); ++p) {
        const T* src = v.data.data() + p * ps;
        T* dst = out.data.data() + p * ps;
        T m = src[0];
        for (size_t n = 1; n < ps; ++n) m = std::max(m, src[n]);
        T sum = T(0);
        for (size_t n = 0; n < ps; ++n) {
            dst[n] = std::exp(src[n] - m);
            sum += dst[n];
        }
        const T inv = T(1) / sum;
        for (size_t n = 0; n < ps; ++n) dst[n] *= inv;
    }
    return out;
}

template <typename T>
CorrVolume4<T> avg_pool_target(const CorrVolume4<T>& v) {
    if (v.h2 % 2 != 0 || v.w2 % 2 != 0)
        throw DimensionError("avg_pool_target: target dims must be even");
    CorrVolume4<T> out(v.h1, v.w1, v.h2 / 2, v.w2 / 2);
    const size_t in_ps = v.plane_size();
    const size_t out_ps = out.plane_size();
    detail::parallel_for(v.num_planes(), 64, [&](size_t lo, size_t hi) {
        for (size_t p = lo; p < hi; ++p) {
            const T* src = v.data.data() + p * in_ps;
            T* dst = out.data.data() + p * out_ps;
            for (int oy = 0; oy < out.h2; ++oy) {
                const T* r0 = src + static_cast<size_t>(2 * oy) * v.w2;
                const T* r1 = r0 + v.w2;
                for (int ox = 0; ox < out.w2; ++ox) {
                    const int x = 2 * ox;
                    dst[static_cast<size_t>(oy) * out.w2 + ox] =
                        (r0[x] + r0[x + 1] + r1[x] + r1[x + 1]) * T(0.25);
                }
            }
        }
    });
    return out;
}

#define CGCV_INSTANTIATE(T)                                                     \
    template T inner_product<T>(const FeatureMap<T>&, const FeatureMap<T>&,    \
                                int, int, int, int, T);                         \
    template T stable_sigmoid<T>(T);                                            \
    template CorrVolume4<T> map_sigmoid<T>(const CorrVolume4<T>&);              \
    template CorrVolume4<T> map_softmax_lastdims<T>(const CorrVolume4<T>&);     \
    template CorrVolume4<T> avg_pool_target<T>(const CorrVolume4<T>&);

CGCV_INSTANTIATE(float)
CGCV_INSTANTIATE(double)
#undef CGCV_INSTANTIATE

}  // namespace cgcv
