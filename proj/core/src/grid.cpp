#include "otflow/grid.hpp"

#include <cmath>
#include <string>

namespace otflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kValueOutOfRange: return "value-out-of-range";
    case ErrorCode::kNonFiniteValue: return "non-finite-value";
    case ErrorCode::kNonFiniteScore: return "non-finite-score";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIterationExhausted: return "iteration-exhausted";
    case ErrorCode::kWeightNotConvex: return "weight-not-convex";
    case ErrorCode::kEmptyPredictionList: return "empty-prediction-list";
    case ErrorCode::kEmptyMask: return "empty-mask";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kTruncatedFile: return "truncated-file";
    case ErrorCode::kOutOfRepresentableRange: return "value-out-of-representable-range";
    case ErrorCode::kDegenerateAffine: return "degenerate-affine";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown-error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

std::string to_string(Scale s) { return std::to_string(scale_factor(s)); }

namespace {

std::size_t area(int width, int height, const char* what) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": negative extent");
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

void check_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNonFiniteValue,
                  std::string(what) + ": non-finite entry at index " +
                      std::to_string(i));
    }
  }
}

void check_unit_range(std::span<const double> values, const char* what) {
  check_finite(values, what);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0 || values[i] > 1.0) {
      throw Error(ErrorCode::kValueOutOfRange,
                  std::string(what) + ": value " + std::to_string(values[i]) +
                      " outside [0,1] at index " + std::to_string(i));
    }
  }
}

template <typename Grid>
void check_grid_size(const Grid& g, std::size_t channels, const char* what) {
  if (g.data().size() != area(g.width(), g.height(), what) * channels) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": data length does not match extents");
  }
}

}  // namespace

FlowField::FlowField(int width, int height, Scale scale)
    : width_(width),
      height_(height),
      scale_(scale),
      data_(area(width, height, "FlowField") * 2, 0.0) {}

FlowField::FlowField(int width, int height, Scale scale,
                     std::vector<double> data)
    : width_(width), height_(height), scale_(scale), data_(std::move(data)) {
  validate(*this);
}

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kDimensionMismatch, "Image: channels must be 1 or 3");
  }
  data_.assign(area(width, height, "Image") * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  validate(*this);
}

double Image::luminance(int x, int y) const {
  const std::size_t base = pixel_index(x, y, width_) * channels_;
  if (channels_ == 1) return data_[base];
  return (data_[base] + data_[base + 1] + data_[base + 2]) / 3.0;
}

CostVolume::CostVolume(int h, int w) : h_(h), w_(w) {
  const std::size_t n = area(w, h, "CostVolume");
  data_.assign(n * n, 0.0);
}

CostVolume::CostVolume(int h, int w, std::vector<double> data)
    : h_(h), w_(w), data_(std::move(data)) {
  validate(*this);
}

ProbabilityVolume::ProbabilityVolume(int h, int w) : h_(h), w_(w) {
  const std::size_t n = area(w, h, "ProbabilityVolume");
  mass_.assign(n * n, 0.0);
  dustbin_src_.assign(n, 0.0);
  dustbin_tgt_.assign(n, 0.0);
}

void validate(const FlowField& flow) {
  check_grid_size(flow, 2, "FlowField");
  check_finite(flow.data(), "FlowField");
}

void validate(const ConfidenceMap& map) {
  check_grid_size(map, 1, "ConfidenceMap");
  check_unit_range(map.data(), "ConfidenceMap");
}

void validate(const OcclusionMap& map) {
  check_grid_size(map, 1, "OcclusionMap");
  check_unit_range(map.data(), "OcclusionMap");
}

void validate(const ScalarField& field) {
  check_grid_size(field, 1, "ScalarField");
  check_finite(field.data(), "ScalarField");
}

void validate(const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::kDimensionMismatch, "Image: channels must be 1 or 3");
  }
  check_grid_size(image, static_cast<std::size_t>(image.channels()), "Image");
  check_unit_range(image.data(), "Image");
}

void validate(const ImagePair& pair) {
  validate(pair.first);
  validate(pair.second);
  if (pair.first.width() != pair.second.width() ||
      pair.first.height() != pair.second.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "ImagePair: images differ in size (" +
                    std::to_string(pair.first.width()) + "x" +
                    std::to_string(pair.first.height()) + " vs " +
                    std::to_string(pair.second.width()) + "x" +
                    std::to_string(pair.second.height()) + ")");
  }
  if (pair.first.width() % 4 != 0 || pair.first.height() % 4 != 0 ||
      pair.first.width() == 0 || pair.first.height() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "ImagePair: dimensions must be positive multiples of 4, got " +
                    std::to_string(pair.first.width()) + "x" +
                    std::to_string(pair.first.height()));
  }
}

void validate(const CostVolume& volume) {
  const std::size_t n = area(volume.w(), volume.h(), "CostVolume");
  if (volume.data().size() != n * n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "CostVolume: data length must be (h*w)^2");
  }
  check_finite(volume.data(), "CostVolume");
}

void validate(const ProbabilityVolume& plan, double row_tolerance) {
  const std::size_t n = area(plan.w(), plan.h(), "ProbabilityVolume");
  if (plan.data().size() != n * n || plan.dustbin_sources().size() != n ||
      plan.dustbin_targets().size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "ProbabilityVolume: inconsistent storage lengths");
  }
  auto check_mass = [](std::span<const double> values, const char* what) {
    check_finite(values, what);
    for (double m : values) {
      if (m < 0.0) {
        throw Error(ErrorCode::kValueOutOfRange,
                    std::string(what) + ": negative transport mass");
      }
    }
  };
  check_mass(plan.data(), "ProbabilityVolume");
  check_mass(plan.dustbin_sources(), "ProbabilityVolume dustbin");
  check_mass(plan.dustbin_targets(), "ProbabilityVolume dustbin");
  const double corner = plan.corner();
  check_mass(std::span<const double>(&corner, 1), "ProbabilityVolume corner");
  for (std::size_t s = 0; s < n; ++s) {
    double sum = plan.dustbin_source(s);
    for (double m : plan.row(s)) sum += m;
    if (std::abs(sum - 1.0) > row_tolerance) {
      throw Error(ErrorCode::kValueOutOfRange,
                  "ProbabilityVolume: source row " + std::to_string(s) +
                      " sums to " + std::to_string(sum));
    }
  }
}

void validate(const RefineState& state) {
  validate(state.flow);
  validate(state.confidence);
  validate(state.occlusion);
  require_same_shape(state.flow, state.confidence, "RefineState");
  require_same_shape(state.flow, state.occlusion, "RefineState");
  if (state.step < 0) {
    throw Error(ErrorCode::kValueOutOfRange, "RefineState: negative step");
  }
}

void validate_binary(const OcclusionMap& map) {
  validate(map);
  for (double v : map.data()) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kValueOutOfRange,
                  "OcclusionMap: ground truth must be binary");
    }
  }
}

}  // namespace otflow
