#include "cgcv/synth.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace cgcv {

namespace {

double wrap(double x, int n) {
    const double m = std::fmod(x, static_cast<double>(n));
    return m < 0.0 ? m + n : m;
}

template <typename T>
T sample_wrap(const FeatureMap<T>& img, int c, double x, double y) {
    const double wx = wrap(x, img.width);
    const double wy = wrap(y, img.height);
    const int x0 = static_cast<int>(wx);
    const int y0 = static_cast<int>(wy);
    const int x1 = (x0 + 1) % img.width;
    const int y1 = (y0 + 1) % img.height;
    const double fx = wx - x0;
    const double fy = wy - y0;
    return static_cast<T>((1 - fx) * (1 - fy) * img.at(c, y0, x0) +
                          fx * (1 - fy) * img.at(c, y0, x1) +
                          (1 - fx) * fy * img.at(c, y1, x0) +
                          fx * fy * img.at(c, y1, x1));
}

// wrap-around value noise: a blurred structure layer plus raw grain, so
// matching features localize instead of smearing across cells
template <typename T>
FeatureMap<T> make_texture(int h, int w, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    FeatureMap<T> img(3, h, w);
    for (T& v : img.data) v = static_cast<T>(dist(rng));
    const int radius = 1;
    FeatureMap<T> blurred(3, h, w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int by = -radius; by <= radius; ++by)
                    for (int bx = -radius; bx <= radius; ++bx)
                        acc += img.at(c, (y + by + h) % h, (x + bx + w) % w);
                blurred.at(c, y, x) = static_cast<T>(acc / 9.0);
            }
    for (size_t n = 0; n < img.data.size(); ++n) {
        const double mixed = 0.55 * blurred.data[n] + 0.45 * img.data[n];
        img.data[n] =
            static_cast<T>(std::clamp((mixed - 0.5) * 2.2 + 0.5, 0.02, 0.98));
    }
    return img;
}

struct Motion {
    // forward map: position in the target frame of reference pixel (x, y)
    std::array<double, 6> fwd;
    std::array<double, 6> inv;
};

Motion motion_for(const SynthSpec& spec, uint32_t pair_index) {
    Motion m;
    double dx = spec.dx, dy = spec.dy;
    if (spec.motion == MotionType::RandomTranslation) {
        std::mt19937 rng(spec.seed * 2654435761u + pair_index + 17u);
        std::uniform_real_distribution<double> d(-spec.max_disp, spec.max_disp);
        dx = d(rng);
        dy = d(rng);
    }
    if (spec.motion == MotionType::Affine) {
        m.fwd = spec.affine;
        const double a = m.fwd[0], b = m.fwd[1], c = m.fwd[2];
        const double d = m.fwd[3], e = m.fwd[4], f = m.fwd[5];
        const double det = a * e - b * d;
        if (std::abs(det) < 1e-12)
            throw ConfigError("synth: affine motion is singular");
        m.inv = {e / det, -b / det, (b * f - c * e) / det,
                 -d / det, a / det, (c * d - a * f) / det};
    } else {
        m.fwd = {1, 0, dx, 0, 1, dy};
        m.inv = {1, 0, -dx, 0, 1, -dy};
    }
    return m;
}

}  // namespace

std::array<int, 4> duplicate_patch_anchors(const SynthSpec& spec) {
    const int p = spec.patch_size;
    const int ax = spec.width / 8;
    const int ay = spec.height / 8;
    const int bx = spec.width - spec.width / 8 - p;
    const int by = ay;
    if (p < 2 || ay + p > spec.height || bx <= ax + p)
        throw ConfigError("synth: duplicate patches do not fit the frame");
    return {ax, ay, bx, by};
}

template <typename T>
SynthPair<T> synth_pair(const SynthSpec& spec, uint32_t pair_index) {
    if (spec.width < 8 || spec.height < 8)
        throw ConfigError("synth: frame must be at least 8x8");
    FeatureMap<T> ref =
        make_texture<T>(spec.height, spec.width, spec.seed + pair_index * 101u);

    if (spec.duplicate_patch) {
        const auto [ax, ay, bx, by] = duplicate_patch_anchors(spec);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < spec.patch_size; ++y)
                for (int x = 0; x < spec.patch_size; ++x)
                    ref.at(c, by + y, bx + x) = ref.at(c, ay + y, ax + x);
    }

    const Motion m = motion_for(spec, pair_index);

    // ground truth is the analytic displacement field
    SynthPair<T> out;
    out.gt = FlowField<T>(spec.height, spec.width);
    size_t in_frame = 0;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const double tx = m.fwd[0] * x + m.fwd[1] * y + m.fwd[2];
            const double ty = m.fwd[3] * x + m.fwd[4] * y + m.fwd[5];
            out.gt.u_at(x, y) = static_cast<T>(tx - x);
            out.gt.v_at(x, y) = static_cast<T>(ty - y);
            if (tx >= 0.0 && tx <= spec.width - 1 && ty >= 0.0 &&
                ty <= spec.height - 1)
                ++in_frame;
        }
    if (in_frame * 2 < static_cast<size_t>(spec.width) * spec.height)
        throw ConfigError(
            "synth: motion moves more than half of the pixels out of frame");

    FeatureMap<T> tgt(3, spec.height, spec.width);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const double sx = m.inv[0] * x + m.inv[1] * y + m.inv[2];
            const double sy = m.inv[3] * x + m.inv[4] * y + m.inv[5];
            for (int c = 0; c < 3; ++c)
                tgt.at(c, y, x) = sample_wrap(ref, c, sx, sy);
        }

    out.pair.reference = std::move(ref);
    out.pair.target = std::move(tgt);
    return out;
}

SynthSpec parse_synth_spec(const std::string& text) {
    SynthSpec spec;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = true;
            for (char c : line)
                if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
            if (blank) continue;
            throw ConfigError("synth spec line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        try {
            if (key == "width") spec.width = std::stoi(value);
            else if (key == "height") spec.height = std::stoi(value);
            else if (key == "seed") spec.seed = static_cast<uint32_t>(std::stoul(value));
            else if (key == "count") spec.count = std::stoi(value);
            else if (key == "patch_size") spec.patch_size = std::stoi(value);
            else if (key == "duplicate_patch") {
                if (value == "on") spec.duplicate_patch = true;
                else if (value == "off") spec.duplicate_patch = false;
                else throw ConfigError("duplicate_patch wants on|off");
            } else if (key == "motion") {
                std::string kind;
                vs >> kind;
                if (kind == "translation") {
                    spec.motion = MotionType::Translation;
                    if (!(vs >> spec.dx >> spec.dy))
                        throw ConfigError("translation wants dx dy");
                } else if (kind == "random_translation") {
                    spec.motion = MotionType::RandomTranslation;
                    if (!(vs >> spec.max_disp))
                        throw ConfigError("random_translation wants max_disp");
                } else if (kind == "affine") {
                    spec.motion = MotionType::Affine;
                    for (double& coef : spec.affine)
                        if (!(vs >> coef))
                            throw ConfigError("affine wants 6 coefficients");
                } else {
                    throw ConfigError("unknown motion kind '" + kind + "'");
                }
            } else {
                throw ConfigError("unknown key '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("synth spec line " + std::to_string(lineno) +
                              ": bad value for '" + key + "'");
        }
    }
    return spec;
}

template SynthPair<float> synth_pair<float>(const SynthSpec&, uint32_t);
template SynthPair<double> synth_pair<double>(const SynthSpec&, uint32_t);

}  // namespace cgcv
