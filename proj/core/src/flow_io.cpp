#include "otflow/flow_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "otflow/image_io.hpp"

namespace otflow {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  const char bytes[4] = {static_cast<char>(bits & 0xff),
                         static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff),
                         static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  static_assert(sizeof(T) == 4);
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                             (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[3]) << 24);
  std::memcpy(&value, &bits, 4);
  return true;
}

constexpr double kKittiScale = 64.0;
constexpr double kKittiOffset = 32768.0;
constexpr double kKittiLimit = 512.0;

}  // namespace

void write_flo(const FlowField& flow, std::ostream& out) {
  validate(flow);
  put_le(out, kFloMagic);
  put_le(out, static_cast<std::int32_t>(flow.width()));
  put_le(out, static_cast<std::int32_t>(flow.height()));
  for (double x : flow.data()) put_le(out, static_cast<float>(x));
  if (!out) throw Error(ErrorCode::kIo, "write_flo: stream write failed");
}

FlowField read_flo(std::istream& in) {
  float magic = 0.0f;
  if (!get_le(in, magic)) throw Error(ErrorCode::kTruncatedFile, "read_flo: missing header");
  if (magic != kFloMagic) {
    throw Error(ErrorCode::kBadMagic,
                "read_flo: magic " + std::to_string(magic) + " is not 202021.25");
  }
  std::int32_t w = 0, h = 0;
  if (!get_le(in, w) || !get_le(in, h)) {
    throw Error(ErrorCode::kTruncatedFile, "read_flo: missing dimensions");
  }
  if (w < 0 || h < 0) {
    throw Error(ErrorCode::kDimensionMismatch, "read_flo: negative dimensions");
  }
  std::vector<double> data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 2);
  for (double& x : data) {
    float f = 0.0f;
    if (!get_le(in, f)) {
      throw Error(ErrorCode::kTruncatedFile,
                  "read_flo: payload shorter than " + std::to_string(w) + "x" +
                      std::to_string(h) + " flow");
    }
    x = f;
  }
  return FlowField(w, h, Scale::kFull, std::move(data));
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  write_flo(flow, out);
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_flo(in);
}

std::vector<std::uint8_t> encode_kitti_png(const FlowField& flow,
                                           const OcclusionMap& valid) {
  validate(flow);
  if (flow.width() != valid.width() || flow.height() != valid.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "encode_kitti_png: validity mask shape mismatch");
  }
  RawPng png;
  png.width = flow.width();
  png.height = flow.height();
  png.channels = 3;
  png.bit_depth = 16;
  png.samples.resize(flow.pixel_count() * 3);
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    for (int c = 0; c < 2; ++c) {
      const double x = flow.data()[2 * i + c];
      const double stored = std::round(x * kKittiScale + kKittiOffset);
      if (std::abs(x) >= kKittiLimit || stored < 0.0 || stored > 65535.0) {
        throw Error(ErrorCode::kOutOfRepresentableRange,
                    "encode_kitti_png: flow component " + std::to_string(x) +
                        " at pixel " + std::to_string(i) + " is outside (-512, 512)");
      }
      png.samples[3 * i + c] = static_cast<std::uint16_t>(stored);
    }
    png.samples[3 * i + 2] = valid[i] > 0.5 ? 1 : 0;
  }
  return encode_png(png);
}

KittiFlow decode_kitti_png(std::span<const std::uint8_t> bytes) {
  const RawPng png = decode_png(bytes);
  if (png.channels != 3 || png.bit_depth != 16) {
    throw Error(ErrorCode::kDimensionMismatch,
                "decode_kitti_png: expected a 16-bit RGB image");
  }
  KittiFlow out{FlowField(png.width, png.height, Scale::kFull),
                OcclusionMap(png.width, png.height, Scale::kFull)};
  for (std::size_t i = 0; i < out.flow.pixel_count(); ++i) {
    out.flow.data()[2 * i] = (png.samples[3 * i] - kKittiOffset) / kKittiScale;
    out.flow.data()[2 * i + 1] = (png.samples[3 * i + 1] - kKittiOffset) / kKittiScale;
    out.valid[i] = png.samples[3 * i + 2] != 0 ? 1.0 : 0.0;
  }
  return out;
}

void write_kitti_png(const FlowField& flow, const OcclusionMap& valid,
                     const std::filesystem::path& path) {
  write_file(path, encode_kitti_png(flow, valid));
}

KittiFlow read_kitti_png(const std::filesystem::path& path) {
  return decode_kitti_png(read_file(path));
}

}  // namespace otflow
