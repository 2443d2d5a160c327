#include "cgcv/viz.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cgcv {

VolumeSource volume_source_from_string(const std::string& s) {
    if (s == "C") return VolumeSource::C;
    if (s == "A") return VolumeSource::A;
    if (s == "M") return VolumeSource::M;
    if (s == "S") return VolumeSource::S;
    if (s == "V") return VolumeSource::V;
    throw ConfigError("unknown volume source '" + s + "' (C|A|M|S|V)");
}

std::vector<uint8_t> normalize_gray(std::span<const float> values) {
    std::vector<uint8_t> out(values.size(), 128);
    if (values.empty()) return out;
    float lo = values[0], hi = values[0];
    for (float v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) return out;  // degenerate range renders mid-gray
    const float scale = 255.0f / (hi - lo);
    for (size_t n = 0; n < values.size(); ++n)
        out[n] = static_cast<uint8_t>(
            std::clamp((values[n] - lo) * scale + 0.5f, 0.0f, 255.0f));
    return out;
}

std::vector<uint8_t> dump_plane(const CorrVolume4<float>& vol, int i, int j) {
    if (i < 0 || i >= vol.w1 || j < 0 || j >= vol.h1)
        throw ContractViolation("dump_plane: query out of range");
    return normalize_gray({vol.plane(i, j), vol.plane_size()});
}

namespace {

// Middlebury-style wheel: six perceptually sized hue transitions.
struct ColorWheel {
    static constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    static constexpr int ncols = RY + YG + GC + CB + BM + MR;
    uint8_t wheel[ncols][3];

    ColorWheel() {
        int k = 0;
        auto put = [&](int r, int g, int b) {
            wheel[k][0] = static_cast<uint8_t>(r);
            wheel[k][1] = static_cast<uint8_t>(g);
            wheel[k][2] = static_cast<uint8_t>(b);
            ++k;
        };
        for (int i = 0; i < RY; ++i) put(255, 255 * i / RY, 0);
        for (int i = 0; i < YG; ++i) put(255 - 255 * i / YG, 255, 0);
        for (int i = 0; i < GC; ++i) put(0, 255, 255 * i / GC);
        for (int i = 0; i < CB; ++i) put(0, 255 - 255 * i / CB, 255);
        for (int i = 0; i < BM; ++i) put(255 * i / BM, 0, 255);
        for (int i = 0; i < MR; ++i) put(255, 0, 255 - 255 * i / MR);
    }
};

void compute_color(float fx, float fy, uint8_t* pix) {
    static const ColorWheel cw;
    const float rad = std::sqrt(fx * fx + fy * fy);
    const float a = std::atan2(-fy, -fx) / static_cast<float>(M_PI);
    const float fk = (a + 1.0f) / 2.0f * (ColorWheel::ncols - 1);
    const int k0 = static_cast<int>(fk);
    const int k1 = (k0 + 1) % ColorWheel::ncols;
    const float f = fk - static_cast<float>(k0);
    for (int b = 0; b < 3; ++b) {
        const float col0 = cw.wheel[k0][b] / 255.0f;
        const float col1 = cw.wheel[k1][b] / 255.0f;
        float col = (1.0f - f) * col0 + f * col1;
        if (rad <= 1.0f)
            col = 1.0f - rad * (1.0f - col);  // saturation grows with radius
        else
            col *= 0.75f;
        pix[b] = static_cast<uint8_t>(255.0f * col + 0.5f);
    }
}

}  // namespace

std::vector<uint8_t> flow_to_rgb(const FlowField<float>& flow) {
    float maxrad = 0.0f;
    for (size_t n = 0; n < flow.size(); ++n) {
        const float rad =
            std::sqrt(flow.u[n] * flow.u[n] + flow.v[n] * flow.v[n]);
        maxrad = std::max(maxrad, rad);
    }
    if (maxrad == 0.0f) maxrad = 1.0f;  // zero field renders white
    std::vector<uint8_t> rgb(flow.size() * 3);
    for (size_t n = 0; n < flow.size(); ++n)
        compute_color(flow.u[n] / maxrad, flow.v[n] / maxrad, rgb.data() + 3 * n);
    return rgb;
}

}  // namespace cgcv
