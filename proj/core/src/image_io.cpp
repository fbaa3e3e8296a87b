#include "otflow/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace otflow {

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

struct ErrorSlot {
  char message[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
  std::snprintf(slot->message, sizeof(slot->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void read_bytes(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes.size()) {
    png_error(png, "unexpected end of PNG data");
  }
  std::memcpy(out, cur->bytes.data() + cur->offset, length);
  cur->offset += length;
}

void write_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* sink = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  sink->insert(sink->end(), data, data + length);
}

void flush_nothing(png_structp) {}

int color_type_for(int channels) {
  switch (channels) {
    case 1: return PNG_COLOR_TYPE_GRAY;
    case 2: return PNG_COLOR_TYPE_GRAY_ALPHA;
    case 3: return PNG_COLOR_TYPE_RGB;
    case 4: return PNG_COLOR_TYPE_RGBA;
    default: return -1;
  }
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RawPng& png) {
  const int color_type = color_type_for(png.channels);
  if (color_type < 0 || (png.bit_depth != 8 && png.bit_depth != 16) ||
      png.width <= 0 || png.height <= 0 ||
      png.samples.size() != static_cast<std::size_t>(png.width) * png.height * png.channels) {
    throw Error(ErrorCode::kDimensionMismatch, "encode_png: inconsistent image description");
  }
  const std::size_t bytes_per_sample = png.bit_depth / 8;
  const std::size_t row_bytes =
      static_cast<std::size_t>(png.width) * png.channels * bytes_per_sample;
  std::vector<std::uint8_t> packed(row_bytes * png.height);
  for (std::size_t i = 0; i < png.samples.size(); ++i) {
    const std::uint16_t s = png.samples[i];
    if (bytes_per_sample == 1) {
      packed[i] = static_cast<std::uint8_t>(std::min<std::uint16_t>(s, 255));
    } else {
      packed[2 * i] = static_cast<std::uint8_t>(s >> 8);
      packed[2 * i + 1] = static_cast<std::uint8_t>(s & 0xff);
    }
  }
  std::vector<png_bytep> rows(png.height);
  for (int y = 0; y < png.height; ++y) rows[y] = packed.data() + row_bytes * y;

  std::vector<std::uint8_t> out;
  ErrorSlot slot;
  png_structp writer =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  png_infop info = writer ? png_create_info_struct(writer) : nullptr;
  if (!writer || !info) {
    png_destroy_write_struct(&writer, &info);
    throw Error(ErrorCode::kIo, "encode_png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(writer))) {
    png_destroy_write_struct(&writer, &info);
    throw Error(ErrorCode::kIo, std::string("encode_png: ") + slot.message);
  }
  png_set_write_fn(writer, &out, write_bytes, flush_nothing);
  png_set_IHDR(writer, info, png.width, png.height, png.bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(writer, info);
  png_write_image(writer, rows.data());
  png_write_end(writer, nullptr);
  png_destroy_write_struct(&writer, &info);
  return out;
}

RawPng decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kBadMagic, "decode_png: missing PNG signature");
  }
  RawPng out;
  std::vector<std::uint8_t> packed;
  std::vector<png_bytep> rows;
  ReadCursor cursor{bytes, 0};
  ErrorSlot slot;
  png_structp reader =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  png_infop info = reader ? png_create_info_struct(reader) : nullptr;
  if (!reader || !info) {
    png_destroy_read_struct(&reader, &info, nullptr);
    throw Error(ErrorCode::kIo, "decode_png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(reader))) {
    png_destroy_read_struct(&reader, &info, nullptr);
    throw Error(ErrorCode::kTruncatedFile, std::string("decode_png: ") + slot.message);
  }
  png_set_read_fn(reader, &cursor, read_bytes);
  png_read_info(reader, info);

  const int color_type = png_get_color_type(reader, info);
  const int depth = png_get_bit_depth(reader, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(reader);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(reader);
  if (png_get_valid(reader, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(reader);
  png_set_interlace_handling(reader);
  png_read_update_info(reader, info);

  out.width = static_cast<int>(png_get_image_width(reader, info));
  out.height = static_cast<int>(png_get_image_height(reader, info));
  out.channels = png_get_channels(reader, info);
  out.bit_depth = png_get_bit_depth(reader, info);
  const std::size_t row_bytes = png_get_rowbytes(reader, info);
  packed.resize(row_bytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = packed.data() + row_bytes * y;
  png_read_image(reader, rows.data());
  png_read_end(reader, nullptr);
  png_destroy_read_struct(&reader, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(count);
  for (int y = 0; y < out.height; ++y) {
    const std::uint8_t* row = packed.data() + row_bytes * y;
    const std::size_t per_row = static_cast<std::size_t>(out.width) * out.channels;
    for (std::size_t k = 0; k < per_row; ++k) {
      out.samples[y * per_row + k] =
          out.bit_depth == 16
              ? static_cast<std::uint16_t>((row[2 * k] << 8) | row[2 * k + 1])
              : row[k];
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  const RawPng png = decode_png(read_file(path));
  const double scale = png.bit_depth == 16 ? 65535.0 : 255.0;
  const bool color = png.channels >= 3;
  const int out_channels = color ? 3 : 1;
  std::vector<double> data(static_cast<std::size_t>(png.width) * png.height * out_channels);
  for (std::size_t p = 0; p < static_cast<std::size_t>(png.width) * png.height; ++p) {
    for (int c = 0; c < out_channels; ++c) {
      data[p * out_channels + c] = png.samples[p * png.channels + c] / scale;
    }
  }
  return Image(png.width, png.height, out_channels, std::move(data));
}

void write_image(const Image& image, const std::filesystem::path& path) {
  validate(image);
  RawPng png;
  png.width = image.width();
  png.height = image.height();
  png.channels = image.channels();
  png.bit_depth = 8;
  png.samples.resize(image.data().size());
  for (std::size_t i = 0; i < image.data().size(); ++i) {
    png.samples[i] = static_cast<std::uint16_t>(std::lround(image.data()[i] * 255.0));
  }
  write_file(path, encode_png(png));
}

OcclusionMap read_mask_png(const std::filesystem::path& path) {
  const RawPng png = decode_png(read_file(path));
  OcclusionMap mask(png.width, png.height, Scale::kFull);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    mask[p] = png.samples[p * png.channels] != 0 ? 1.0 : 0.0;
  }
  return mask;
}

}  // namespace otflow
