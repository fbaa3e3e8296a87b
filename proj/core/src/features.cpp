#include "otflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "otflow/parallel.hpp"

namespace otflow {

namespace {

constexpr double kFlatNorm = 1e-12;

std::vector<double> luminance_plane(const Image& image) {
  std::vector<double> plane(static_cast<std::size_t>(image.width()) *
                            static_cast<std::size_t>(image.height()));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      plane[pixel_index(x, y, image.width())] = image.luminance(x, y);
    }
  }
  return plane;
}

}  // namespace

void validate(const FeatureConfig& cfg) {
  if (cfg.dim <= 0 || cfg.dim % 8 != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "FeatureConfig: dim must be a positive multiple of 8, got " +
                    std::to_string(cfg.dim));
  }
  if (!std::isfinite(cfg.presmooth_sigma) || cfg.presmooth_sigma < 0.0) {
    throw Error(ErrorCode::kInvalidConfig,
                "FeatureConfig: presmooth_sigma must be finite and >= 0");
  }
}

FeatureMap::FeatureMap(int h, int w, int dim) : h_(h), w_(w), dim_(dim) {
  if (h < 0 || w < 0 || dim <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "FeatureMap: bad extents");
  }
  data_.assign(cells() * static_cast<std::size_t>(dim), 0.0);
}

FeatureMap::FeatureMap(int h, int w, int dim, std::vector<double> data)
    : h_(h), w_(w), dim_(dim), data_(std::move(data)) {
  validate(*this);
}

void validate(const FeatureMap& map) {
  if (map.h() < 0 || map.w() < 0 || map.dim() <= 0 ||
      map.data().size() != map.cells() * static_cast<std::size_t>(map.dim())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "FeatureMap: data length must be h*w*dim");
  }
  for (std::size_t i = 0; i < map.cells(); ++i) {
    double sq = 0.0;
    for (double x : map.cell(i)) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kNonFiniteValue,
                    "FeatureMap: non-finite descriptor at cell " +
                        std::to_string(i));
      }
      sq += x * x;
    }
    if (sq != 0.0 && std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
      throw Error(ErrorCode::kValueOutOfRange,
                  "FeatureMap: descriptor at cell " + std::to_string(i) +
                      " is neither unit-norm nor zero");
    }
  }
}

std::vector<double> gaussian_blur(std::span<const double> plane, int width,
                                  int height, double sigma) {
  std::vector<double> out(plane.begin(), plane.end());
  if (sigma <= 0.0 || width == 0 || height == 0) return out;

  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& k : kernel) k /= total;

  std::vector<double> tmp(out.size());
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xs = std::clamp(x + k, 0, width - 1);
        acc += kernel[k + radius] * plane[pixel_index(xs, y, width)];
      }
      tmp[pixel_index(x, y, width)] = acc;
    }
  });
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int ys = std::clamp(y + k, 0, height - 1);
        acc += kernel[k + radius] * tmp[pixel_index(x, ys, width)];
      }
      out[pixel_index(x, y, width)] = acc;
    }
  });
  return out;
}

DenseFeatureField::DenseFeatureField(const Image& image,
                                     const FeatureConfig& cfg) {
  validate(cfg);
  validate(image);
  if (image.width() % 4 != 0 || image.height() % 4 != 0 ||
      image.width() == 0 || image.height() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "extract_features: image dimensions must be positive multiples "
                "of 4, got " +
                    std::to_string(image.width()) + "x" +
                    std::to_string(image.height()));
  }
  full_w_ = image.width();
  full_h_ = image.height();
  w_ = full_w_ / 4;
  h_ = full_h_ / 4;
  dim_ = cfg.dim;

  const std::vector<double> smooth = gaussian_blur(
      luminance_plane(image), full_w_, full_h_, cfg.presmooth_sigma);

  // Direct 16-tap sums rather than an integral image: the result at a pixel
  // then depends only on its own neighbourhood, which keeps grid-aligned
  // shifts bit-exact.
  block_.assign(smooth.size(), 0.0);
  parallel_for(static_cast<std::size_t>(full_h_), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    for (int x = 0; x < full_w_; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < 4; ++dy) {
        const int ys = std::min(y + dy, full_h_ - 1);
        for (int dx = 0; dx < 4; ++dx) {
          const int xs = std::min(x + dx, full_w_ - 1);
          acc += smooth[pixel_index(xs, ys, full_w_)];
        }
      }
      block_[pixel_index(x, y, full_w_)] = acc / 16.0;
    }
  });
}

double DenseFeatureField::pooled(double cu, double cv) const {
  const double x = std::clamp(4.0 * cu, 0.0, static_cast<double>(full_w_ - 1));
  const double y = std::clamp(4.0 * cv, 0.0, static_cast<double>(full_h_ - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, full_w_ - 1);
  const int y1 = std::min(y0 + 1, full_h_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * block_[pixel_index(x0, y0, full_w_)] +
                     fx * block_[pixel_index(x1, y0, full_w_)];
  const double bottom = (1.0 - fx) * block_[pixel_index(x0, y1, full_w_)] +
                        fx * block_[pixel_index(x1, y1, full_w_)];
  return (1.0 - fy) * top + fy * bottom;
}

void DenseFeatureField::sample(double cu, double cv,
                               std::span<double> out) const {
  const double centre = pooled(cu, cv);
  const int rings = dim_ / 8;
  std::size_t c = 0;
  for (int s = 1; s <= rings; ++s) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        out[c++] = pooled(cu + s * dx, cv + s * dy) - centre;
      }
    }
  }
  double sq = 0.0;
  for (double x : out) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm <= kFlatNorm) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (double& x : out) x /= norm;
}

FeatureMap DenseFeatureField::grid() const {
  FeatureMap map(h_, w_, dim_);
  parallel_for(map.cells(), [&](std::size_t i) {
    const int u = static_cast<int>(i % static_cast<std::size_t>(w_));
    const int v = static_cast<int>(i / static_cast<std::size_t>(w_));
    sample(u, v, map.at(u, v));
  });
  return map;
}

FeatureMap extract_features(const Image& image, const FeatureConfig& cfg) {
  return DenseFeatureField(image, cfg).grid();
}

}  // namespace otflow
