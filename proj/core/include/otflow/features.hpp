#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "otflow/grid.hpp"

namespace otflow {

struct FeatureConfig {
  // Descriptor length; must be a positive multiple of 8 (one ring of eight
  // neighbour differences per 8 channels).
  int dim = 16;
  // Gaussian pre-smoothing in full-resolution pixels (0 disables).
  double presmooth_sigma = 1.5;
};

void validate(const FeatureConfig& cfg);

// Quarter-resolution descriptor grid g with one L2-normalised vector per cell
// (or an exact zero vector for flat patches).
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int h, int w, int dim);
  FeatureMap(int h, int w, int dim, std::vector<double> data);

  int h() const { return h_; }
  int w() const { return w_; }
  int dim() const { return dim_; }
  std::size_t cells() const {
    return static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_);
  }

  std::span<const double> at(int u, int v) const {
    return std::span<const double>(data_).subspan(
        pixel_index(u, v, w_) * dim_, static_cast<std::size_t>(dim_));
  }
  std::span<double> at(int u, int v) {
    return std::span<double>(data_).subspan(pixel_index(u, v, w_) * dim_,
                                            static_cast<std::size_t>(dim_));
  }
  std::span<const double> cell(std::size_t index) const {
    return std::span<const double>(data_).subspan(
        index * dim_, static_cast<std::size_t>(dim_));
  }

  std::span<const double> data() const { return data_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int h_ = 0;
  int w_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

// Checks storage length and that every descriptor is unit-norm within 1e-6
// or exactly zero.
void validate(const FeatureMap& map);

// Descriptor field that can be evaluated at continuous quarter-resolution
// positions. Channel layout: for ring s = 1..dim/8, the eight neighbours at
// offsets s*(dx, dy), dy-major, each contributing pooled(neighbour) -
// pooled(centre), where pooled(cu, cv) is the 4x4 block mean whose top-left
// corner sits at full-resolution (4cu, 4cv).
class DenseFeatureField {
 public:
  DenseFeatureField(const Image& image, const FeatureConfig& cfg);

  int h() const { return h_; }
  int w() const { return w_; }
  int dim() const { return dim_; }

  // Writes the descriptor at (cu, cv) into out (size dim). Every tap is
  // clamped to the image at pixel level (border replication), so lookups
  // never fail.
  void sample(double cu, double cv, std::span<double> out) const;

  // Descriptors at every integer cell.
  FeatureMap grid() const;

 private:
  double pooled(double cu, double cv) const;

  int h_ = 0;
  int w_ = 0;
  int dim_ = 0;
  int full_w_ = 0;
  int full_h_ = 0;
  // Block means at every full-resolution offset.
  std::vector<double> block_;
};

// Deterministic stand-in for a learned backbone: DenseFeatureField sampled at
// integer cells.
FeatureMap extract_features(const Image& image, const FeatureConfig& cfg = {});

// Separable Gaussian blur with replicated borders, radius ceil(4 sigma).
// Exposed for tests and tooling.
std::vector<double> gaussian_blur(std::span<const double> plane, int width,
                                  int height, double sigma);

}  // namespace otflow
