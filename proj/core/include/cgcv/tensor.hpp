#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cgcv/errors.hpp"

namespace cgcv {

// Dense C x H x W activation tensor, channel outermost, each channel plane
// a contiguous row-major H x W grid. Spatial coordinates are (x, y) with x
// along width.
template <typename T>
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<size_t>(c) * h * w, T(0)) {}

    size_t size() const { return data.size(); }
    size_t plane_size() const { return static_cast<size_t>(height) * width; }

    T& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    T at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    T* plane(int c) { return data.data() + static_cast<size_t>(c) * plane_size(); }
    const T* plane(int c) const {
        return data.data() + static_cast<size_t>(c) * plane_size();
    }

    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// Dense 4D correlation volume between a reference grid (h1 x w1) and a
// target grid (h2 x w2). Storage keeps the reference cell outermost so each
// target-side (k, l) plane is contiguous:
//
//   linear = ((ref_y * w1 + ref_x) * h2 + tgt_y) * w2 + tgt_x
//
// The plane for one reference cell is therefore a row-major h2 x w2 grid.
template <typename T>
struct CorrVolume4 {
    int h1 = 0, w1 = 0;  // reference-grid dims
    int h2 = 0, w2 = 0;  // target-grid dims
    std::vector<T> data;

    CorrVolume4() = default;
    CorrVolume4(int h1_, int w1_, int h2_, int w2_)
        : h1(h1_), w1(w1_), h2(h2_), w2(w2_),
          data(static_cast<size_t>(h1_) * w1_ * h2_ * w2_, T(0)) {}

    size_t size() const { return data.size(); }
    size_t plane_size() const { return static_cast<size_t>(h2) * w2; }
    size_t num_planes() const { return static_cast<size_t>(h1) * w1; }

    T& at(int ref_x, int ref_y, int tgt_x, int tgt_y) {
        return data[((static_cast<size_t>(ref_y) * w1 + ref_x) * h2 + tgt_y) * w2 +
                    tgt_x];
    }
    T at(int ref_x, int ref_y, int tgt_x, int tgt_y) const {
        return data[((static_cast<size_t>(ref_y) * w1 + ref_x) * h2 + tgt_y) * w2 +
                    tgt_x];
    }

    T* plane(int ref_x, int ref_y) {
        return data.data() + (static_cast<size_t>(ref_y) * w1 + ref_x) * plane_size();
    }
    const T* plane(int ref_x, int ref_y) const {
        return data.data() + (static_cast<size_t>(ref_y) * w1 + ref_x) * plane_size();
    }

    bool same_shape(const CorrVolume4& o) const {
        return h1 == o.h1 && w1 == o.w1 && h2 == o.h2 && w2 == o.w2;
    }
};

template <typename T>
bool all_finite(std::span<const T> v) {
    for (T x : v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

template <typename T>
bool all_finite(const FeatureMap<T>& m) {
    return all_finite(std::span<const T>(m.data));
}
template <typename T>
bool all_finite(const CorrVolume4<T>& v) {
    return all_finite(std::span<const T>(v.data));
}

// scale * <a[:, j, i], b[:, l, k]>, summed channel-ascending.
template <typename T>
T inner_product(const FeatureMap<T>& a, const FeatureMap<T>& b, int i, int j,
                int k, int l, T scale);

// Numerically stable logistic, clamped into the open interval (0, 1).
template <typename T>
T stable_sigmoid(T x);

template <typename T>
CorrVolume4<T> map_sigmoid(const CorrVolume4<T>& v);

// Shift-stabilized softmax over each reference cell's (k, l) plane.
template <typename T>
CorrVolume4<T> map_softmax_lastdims(const CorrVolume4<T>& v);

// 2x2 mean pooling over the target dims; requires even h2, w2.
template <typename T>
CorrVolume4<T> avg_pool_target(const CorrVolume4<T>& v);

// The four corner taps of a bilinear sample at (x, y) on an h x w grid.
// Corners falling outside [0, w-1] x [0, h-1] are dropped (zero padding).
template <typename T>
struct BilinearTaps {
    int count = 0;
    size_t idx[4];  // linear index y * w + x
    T weight[4];
    T dwdx[4];  // d(weight)/dx, for positional gradients
    T dwdy[4];
};

template <typename T>
BilinearTaps<T> bilinear_taps(int h, int w, T x, T y) {
    BilinearTaps<T> taps;
    // every corner is out of range (also catches NaN/Inf coordinates)
    if (!(x > T(-1) && x < static_cast<T>(w) && y > T(-1) &&
          y < static_cast<T>(h)))
        return taps;
    const T xf = std::floor(x);
    const T yf = std::floor(y);
    const int x0 = static_cast<int>(xf);
    const int y0 = static_cast<int>(yf);
    const T fx = x - xf;
    const T fy = y - yf;
    const int xs[2] = {x0, x0 + 1};
    const int ys[2] = {y0, y0 + 1};
    const T wx[2] = {T(1) - fx, fx};
    const T wy[2] = {T(1) - fy, fy};
    const T gx[2] = {T(-1), T(1)};
    for (int cy = 0; cy < 2; ++cy) {
        if (ys[cy] < 0 || ys[cy] >= h) continue;
        for (int cx = 0; cx < 2; ++cx) {
            if (xs[cx] < 0 || xs[cx] >= w) continue;
            const int n = taps.count++;
            taps.idx[n] = static_cast<size_t>(ys[cy]) * w + xs[cx];
            taps.weight[n] = wx[cx] * wy[cy];
            taps.dwdx[n] = gx[cx] * wy[cy];
            taps.dwdy[n] = wx[cx] * gx[cy];
        }
    }
    return taps;
}

template <typename T>
T bilinear_sample_plane(std::span<const T> plane, int h, int w, T x, T y) {
    const BilinearTaps<T> taps = bilinear_taps(h, w, x, y);
    T acc = T(0);
    for (int n = 0; n < taps.count; ++n) acc += taps.weight[n] * plane[taps.idx[n]];
    return acc;
}

namespace detail {
// Splits [0, n) into contiguous chunks across worker threads. Falls back to
// the calling thread below `grain` items so tiny workloads stay cheap.
void parallel_for(size_t n, size_t grain, const std::function<void(size_t, size_t)>& body);
}  // namespace detail

}  // namespace cgcv
