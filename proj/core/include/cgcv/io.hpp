#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "cgcv/model.hpp"

namespace cgcv {

// Middlebury .flo magic ("PIEH" as a little-endian float).
inline constexpr float kFloMagic = 202021.25f;

inline constexpr uint32_t kVolumeVersion = 1;      // "CGCV" dump
inline constexpr uint32_t kCheckpointVersion = 1;  // "CGCK" weights

// Binary PPM (P6) or PGM (P5), maxval <= 255; grayscale is replicated to
// three channels, values scaled into [0, 1].
FeatureMap<float> read_image(const std::string& path);

void write_ppm(const FeatureMap<float>& img, const std::string& path);
void write_pgm(std::span<const uint8_t> gray, int height, int width,
               const std::string& path);

// Minimal RGB8 PNG (stored-deflate zlib stream, no external codec).
void write_png_rgb(std::span<const uint8_t> rgb, int height, int width,
                   const std::string& path);

// .flo layout: f32 magic, i32 width, i32 height, interleaved f32 (u, v)
// row-major; little-endian throughout. Round trips are bit-exact.
void write_flo(const FlowField<float>& flow, const std::string& path);
FlowField<float> read_flo(const std::string& path);

// Volume dump: "CGCV", u32 version, u32 h1 w1 h2 w2, f32 payload in storage
// order (reference cell raster-major, then target plane raster-major).
void write_volume(const CorrVolume4<float>& v, const std::string& path);
CorrVolume4<float> read_volume(const std::string& path);

// Checkpoint: "CGCK", u32 version, u32 tensor count, then per tensor:
// u32 name length, name bytes, u32 rank, u32 dims[rank], f32 payload.
template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path);

// Rebuilds the model shape from the tensor table; the runtime knobs
// (gate mode, lift, lookup geometry, iterations) come from the caller and
// the lookup geometry is validated against the stored GRU input width.
template <typename T>
Model<T> load_checkpoint(const std::string& path, GateMode mode, bool lift,
                         int radius, int levels, int iterations,
                         uint32_t seed = 0);

}  // namespace cgcv
