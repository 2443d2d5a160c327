#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "cgcv/encoder.hpp"

namespace cgcv {

enum class MotionType { Translation, RandomTranslation, Affine };

// Parsed from plain "key = value" lines:
//   width / height / seed / count / patch_size : integers
//   motion = translation <dx> <dy>
//   motion = random_translation <max_disp>
//   motion = affine <a> <b> <c> <d> <e> <f>     (x' = ax+by+c, y' = dx+ey+f)
//   duplicate_patch = on | off
struct SynthSpec {
    int width = 64;
    int height = 64;
    uint32_t seed = 0;
    int count = 1;
    MotionType motion = MotionType::Translation;
    double dx = 0.0;
    double dy = 0.0;
    double max_disp = 6.0;
    std::array<double, 6> affine = {1, 0, 0, 0, 1, 0};
    bool duplicate_patch = false;
    int patch_size = 16;
};

SynthSpec parse_synth_spec(const std::string& text);

template <typename T>
struct SynthPair {
    ImagePair<T> pair;
    FlowField<T> gt;  // full resolution, exact for the specified motion
};

// Wrap-around seeded texture warped by the specified motion; optionally
// plants two pixel-identical patches at disjoint known locations.
// pair_index varies the texture (and the draw for random translations).
template <typename T>
SynthPair<T> synth_pair(const SynthSpec& spec, uint32_t pair_index = 0);

// Patch anchor positions used when duplicate_patch is on, for tests and
// diagnostics: {first_x, first_y, second_x, second_y}.
std::array<int, 4> duplicate_patch_anchors(const SynthSpec& spec);

}  // namespace cgcv
