#pragma once

// Dense value types shared by every stage of the pipeline.
//
// Conventions:
//   * coordinates are (u = column, v = row);
//   * storage is row-major: index = v * width + u;
//   * every grid carries a Scale tag (1 = full resolution, 4 = quarter
//     resolution) and operations reject mixed scales.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "otflow/error.hpp"

namespace otflow {

enum class Scale : int { kFull = 1, kQuarter = 4 };

inline int scale_factor(Scale s) { return static_cast<int>(s); }
std::string to_string(Scale s);

inline std::size_t pixel_index(int u, int v, int width) {
  return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
         static_cast<std::size_t>(u);
}

// Two-channel displacement field in pixels of its own scale.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height, Scale scale);
  // data holds interleaved (du, dv) pairs; throws on length mismatch or
  // non-finite entries.
  FlowField(int width, int height, Scale scale, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  Scale scale() const { return scale_; }
  std::size_t pixel_count() const { return data_.size() / 2; }

  double u(int x, int y) const { return data_[2 * pixel_index(x, y, width_)]; }
  double v(int x, int y) const {
    return data_[2 * pixel_index(x, y, width_) + 1];
  }
  void set(int x, int y, double du, double dv) {
    const std::size_t i = 2 * pixel_index(x, y, width_);
    data_[i] = du;
    data_[i + 1] = dv;
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  Scale scale_ = Scale::kFull;
  std::vector<double> data_;
};

// Single-channel grid. Bounded grids (confidence, occlusion) require every
// value in [0, 1]; ScalarField carries unconstrained values such as logit
// residuals.
template <typename Tag>
class ScalarGrid {
 public:
  static constexpr bool kBounded = Tag::kBounded;

  ScalarGrid() = default;
  ScalarGrid(int width, int height, Scale scale, double fill = 0.0)
      : width_(width),
        height_(height),
        scale_(scale),
        data_(checked_size(width, height), fill) {}
  ScalarGrid(int width, int height, Scale scale, std::vector<double> data)
      : width_(width), height_(height), scale_(scale), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(Tag::kName) + ": data length does not match " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Scale scale() const { return scale_; }
  std::size_t pixel_count() const { return data_.size(); }

  double at(int x, int y) const { return data_[pixel_index(x, y, width_)]; }
  double& at(int x, int y) { return data_[pixel_index(x, y, width_)]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const ScalarGrid&, const ScalarGrid&) = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(Tag::kName) + ": negative extent");
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  Scale scale_ = Scale::kFull;
  std::vector<double> data_;
};

struct ConfidenceTag {
  static constexpr bool kBounded = true;
  static constexpr const char* kName = "ConfidenceMap";
};
struct OcclusionTag {
  static constexpr bool kBounded = true;
  static constexpr const char* kName = "OcclusionMap";
};
struct ScalarTag {
  static constexpr bool kBounded = false;
  static constexpr const char* kName = "ScalarField";
};

// Probability that the flow at a pixel is within the confidence band.
using ConfidenceMap = ScalarGrid<ConfidenceTag>;
// 1 = pixel has a valid correspondence (non-occluded), 0 = occluded.
using OcclusionMap = ScalarGrid<OcclusionTag>;
using ScalarField = ScalarGrid<ScalarTag>;

// Intensity image with 1 (gray) or 3 (RGB) interleaved channels in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  double at(int x, int y, int c = 0) const {
    return data_[pixel_index(x, y, width_) * channels_ + c];
  }
  double& at(int x, int y, int c = 0) {
    return data_[pixel_index(x, y, width_) * channels_ + c];
  }
  // Channel mean; identical to at(x, y) for gray images.
  double luminance(int x, int y) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

struct ImagePair {
  Image first;
  Image second;
};

// All-pairs similarity at quarter resolution: entry (source, target) with
// source = pixel_index(u, v, w) and target = pixel_index(u', v', w).
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int h, int w);
  CostVolume(int h, int w, std::vector<double> data);

  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t pixels() const {
    return static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_);
  }

  double at(std::size_t source, std::size_t target) const {
    return data_[source * pixels() + target];
  }
  double& at(std::size_t source, std::size_t target) {
    return data_[source * pixels() + target];
  }
  std::span<const double> row(std::size_t source) const {
    return std::span<const double>(data_).subspan(source * pixels(), pixels());
  }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

 private:
  int h_ = 0;
  int w_ = 0;
  std::vector<double> data_;
};

// Transport plan over valid pixels plus the dustbin row/column.
class ProbabilityVolume {
 public:
  ProbabilityVolume() = default;
  ProbabilityVolume(int h, int w);

  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t pixels() const {
    return static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_);
  }

  double at(std::size_t source, std::size_t target) const {
    return mass_[source * pixels() + target];
  }
  double& at(std::size_t source, std::size_t target) {
    return mass_[source * pixels() + target];
  }
  std::span<const double> row(std::size_t source) const {
    return std::span<const double>(mass_).subspan(source * pixels(), pixels());
  }
  std::span<double> row(std::size_t source) {
    return std::span<double>(mass_).subspan(source * pixels(), pixels());
  }

  double dustbin_source(std::size_t source) const { return dustbin_src_[source]; }
  double& dustbin_source(std::size_t source) { return dustbin_src_[source]; }
  double dustbin_target(std::size_t target) const { return dustbin_tgt_[target]; }
  double& dustbin_target(std::size_t target) { return dustbin_tgt_[target]; }
  double corner() const { return corner_; }
  double& corner() { return corner_; }

  std::span<const double> data() const { return mass_; }
  std::span<double> data() { return mass_; }
  std::span<const double> dustbin_sources() const { return dustbin_src_; }
  std::span<const double> dustbin_targets() const { return dustbin_tgt_; }

 private:
  int h_ = 0;
  int w_ = 0;
  std::vector<double> mass_;
  std::vector<double> dustbin_src_;
  std::vector<double> dustbin_tgt_;
  double corner_ = 0.0;
};

// (F^t, Gamma^t, O^t, t) at quarter resolution.
struct RefineState {
  FlowField flow;
  ConfidenceMap confidence;
  OcclusionMap occlusion;
  int step = 0;
};

// Invariant checks. Each throws Error with kDimensionMismatch,
// kValueOutOfRange or kNonFiniteValue; they are idempotent and never modify
// their argument.
void validate(const FlowField& flow);
void validate(const ConfidenceMap& map);
void validate(const OcclusionMap& map);
void validate(const ScalarField& field);
void validate(const Image& image);
void validate(const ImagePair& pair);
void validate(const CostVolume& volume);
// row_tolerance bounds |row sum - 1| for every valid source row.
void validate(const ProbabilityVolume& plan, double row_tolerance = 1e-6);
void validate(const RefineState& state);

// Ground-truth occlusion must be exactly 0 or 1 everywhere.
void validate_binary(const OcclusionMap& map);

// Throws kDimensionMismatch unless both grids have equal width, height and
// scale.
template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height() ||
      a.scale() != b.scale()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": shape mismatch (" +
                    std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + "@" + to_string(a.scale()) +
                    " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + "@" + to_string(b.scale()) +
                    ")");
  }
}

}  // namespace otflow
