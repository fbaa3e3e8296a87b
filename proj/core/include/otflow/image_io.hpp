#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "otflow/grid.hpp"

namespace otflow {

// Decoded PNG samples, interleaved, one uint16 per channel sample regardless
// of the stored bit depth (8-bit samples stay in [0, 255]).
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 gray, 2 gray+alpha, 3 RGB, 4 RGBA
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

std::vector<std::uint8_t> encode_png(const RawPng& png);
RawPng decode_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

// Reads a PNG as an intensity image in [0, 1]. Alpha is dropped; gray images
// stay single-channel.
Image read_image(const std::filesystem::path& path);
// Writes an image as an 8-bit PNG with values rounded from [0, 1].
void write_image(const Image& image, const std::filesystem::path& path);

// 8-bit gray PNG of a probability map (confidence or occlusion).
template <typename Tag>
void write_probability_png(const ScalarGrid<Tag>& map,
                           const std::filesystem::path& path) {
  Image img(map.width(), map.height(), 1);
  for (std::size_t i = 0; i < map.pixel_count(); ++i) img.data()[i] = map[i];
  write_image(img, path);
}

// Reads an 8/16-bit gray PNG into an occlusion map; nonzero samples map to 1.
OcclusionMap read_mask_png(const std::filesystem::path& path);

}  // namespace otflow
