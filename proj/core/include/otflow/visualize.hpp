#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "otflow/grid.hpp"

namespace otflow {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB
};

// The 55-entry Middlebury wheel (RY 15, YG 6, GC 4, CB 11, BM 13, MR 6).
const std::vector<std::array<std::uint8_t, 3>>& color_wheel();

// Colour of a displacement already divided by the normalising magnitude.
// Direction 0 rad (+u) sits at wheel entry 0 (red); |(nu, nv)| <= 1 blends
// towards white, larger magnitudes are darkened by 0.75.
std::array<std::uint8_t, 3> flow_color(double nu, double nv);

// 99th percentile of the per-pixel magnitude (linear interpolation between
// order statistics).
double percentile_magnitude(const FlowField& flow, double q = 0.99);

// Middlebury colour coding normalised by max_mag, or by the 99th-percentile
// magnitude when absent. A zero normaliser renders white.
RgbImage visualize_flow(const FlowField& flow,
                        std::optional<double> max_mag = std::nullopt);

void write_rgb_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace otflow
