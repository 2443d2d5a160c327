#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cgcv/corr.hpp"

namespace cgcv {

// Which stage of the volume chain a dump refers to.
enum class VolumeSource { C, A, M, S, V };

VolumeSource volume_source_from_string(const std::string& s);

// Min-max normalization to [0, 255]; a zero-range input maps to uniform 128.
std::vector<uint8_t> normalize_gray(std::span<const float> values);

// The (k, l) plane of reference cell (i, j), min-max normalized.
std::vector<uint8_t> dump_plane(const CorrVolume4<float>& vol, int i, int j);

// Classic flow color wheel; magnitude normalized over the field, zero flow
// renders white. Returns packed RGB rows (3 * width * height bytes).
std::vector<uint8_t> flow_to_rgb(const FlowField<float>& flow);

}  // namespace cgcv
