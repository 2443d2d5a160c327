#pragma once

#include <utility>
#include <vector>

#include "cgcv/tensor.hpp"

namespace cgcv {

// Multi-scale stack of correlation volumes. Level 0 is the full-resolution
// volume; each further level halves the target dims by 2x2 mean pooling.
// Reference dims are identical across levels.
template <typename T>
struct CorrPyramid {
    std::vector<CorrVolume4<T>> levels;
    int num_levels() const { return static_cast<int>(levels.size()); }
};

struct LookupConfig {
    int radius = 4;
    int num_levels = 4;
    int window() const { return 2 * radius + 1; }
    int feature_length() const { return num_levels * window() * window(); }
};

// Per-cell correlation features sampled from the pyramid. Each reference
// cell owns a contiguous run of `length` values, ordered levels ascending,
// then window offsets row-major:
//
//   f = (level * (2r+1) + (dy + r)) * (2r+1) + (dx + r)
template <typename T>
struct CorrFeatures {
    int height = 0;
    int width = 0;
    int length = 0;
    std::vector<T> data;

    CorrFeatures() = default;
    CorrFeatures(int h, int w, int len)
        : height(h), width(w), length(len),
          data(static_cast<size_t>(h) * w * len, T(0)) {}

    T& at(int x, int y, int f) {
        return data[(static_cast<size_t>(y) * width + x) * length + f];
    }
    T at(int x, int y, int f) const {
        return data[(static_cast<size_t>(y) * width + x) * length + f];
    }
};

// Displacement field on the reference grid, in grid cells.
template <typename T>
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<T> u;  // x displacement
    std::vector<T> v;  // y displacement

    FlowField() = default;
    FlowField(int h, int w)
        : height(h), width(w), u(static_cast<size_t>(h) * w, T(0)),
          v(static_cast<size_t>(h) * w, T(0)) {}

    size_t size() const { return u.size(); }
    T& u_at(int x, int y) { return u[static_cast<size_t>(y) * width + x]; }
    T u_at(int x, int y) const { return u[static_cast<size_t>(y) * width + x]; }
    T& v_at(int x, int y) { return v[static_cast<size_t>(y) * width + x]; }
    T v_at(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }
};

// C[i,j,k,l] = (1/sqrt(n)) <g1[:,j,i], g2[:,l,k]> over all index tuples.
template <typename T>
CorrVolume4<T> build_all_pairs(const FeatureMap<T>& g1, const FeatureMap<T>& g2);

template <typename T>
CorrPyramid<T> build_pyramid(const CorrVolume4<T>& v, int num_levels);

// Radius-bounded window sampling around the flow-displaced position at each
// pyramid level. Level-t samples sit at ((x+u)/2^t + dx, (y+v)/2^t + dy)
// with |dx|,|dy| <= radius, bilinear with zero padding.
template <typename T>
CorrFeatures<T> lookup(const CorrPyramid<T>& p, const FlowField<T>& flow,
                       const LookupConfig& cfg);

// (tgt_x, tgt_y) maximizing the plane of reference cell (i, j); ties break
// toward the smallest linear index (raster order).
template <typename T>
std::pair<int, int> argmax_plane(const CorrVolume4<T>& v, int i, int j);

namespace detail {
// Shared all-pairs inner-product kernel; channel summation is ascending so
// threaded and serial runs agree bit-for-bit.
template <typename T>
CorrVolume4<T> all_pairs_scaled(const FeatureMap<T>& a, const FeatureMap<T>& b,
                                T scale);
}  // namespace detail

}  // namespace cgcv
