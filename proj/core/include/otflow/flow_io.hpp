#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "otflow/grid.hpp"

namespace otflow {

// Middlebury .flo: float32 magic 202021.25, int32 width, int32 height, then
// row-major interleaved float32 (u, v), all little-endian. Values are stored
// as float32, so round trips are exact for float32-representable flows.
inline constexpr float kFloMagic = 202021.25f;

void write_flo(const FlowField& flow, std::ostream& out);
FlowField read_flo(std::istream& in);
void write_flo(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

// KITTI flow PNG: 16-bit RGB, R/G = flow * 64 + 32768 (rounded), B = valid.
struct KittiFlow {
  FlowField flow;
  OcclusionMap valid;
};

// Throws kOutOfRepresentableRange if any component has |flow| >= 512 px.
std::vector<std::uint8_t> encode_kitti_png(const FlowField& flow,
                                           const OcclusionMap& valid);
KittiFlow decode_kitti_png(std::span<const std::uint8_t> bytes);
void write_kitti_png(const FlowField& flow, const OcclusionMap& valid,
                     const std::filesystem::path& path);
KittiFlow read_kitti_png(const std::filesystem::path& path);

}  // namespace otflow
