#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "otflow/grid.hpp"

namespace otflow {

struct Translation {
  double du = 0.0;
  double dv = 0.0;
};

// p' = [a b c; d e f] * (x, y, 1).
struct Affine {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
};

// Axis-aligned rectangle [x0, x1) x [y0, y1) in frame 1 that moves by
// (du, dv). Later rectangles are in front of earlier ones; the background is
// static.
struct MovingRect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double du = 0.0, dv = 0.0;
};

struct Layered {
  std::vector<MovingRect> layers;
};

using Motion = std::variant<Translation, Affine, Layered>;

struct SceneSpec {
  int width = 64;
  int height = 64;
  Motion motion = Translation{};
  std::uint64_t texture_seed = 0;
};

void validate(const SceneSpec& spec);

struct Scene {
  ImagePair images;
  FlowField flow;          // forward ground truth, full resolution
  OcclusionMap occlusion;  // 1 = visible in frame 2, 0 = occluded
};

// Band-limited procedural texture: a sum of plane waves with log-uniform
// wavelengths in [min_wavelength, max_wavelength] and amplitude proportional
// to wavelength. Evaluated analytically at any real position, so frame 2 is
// rendered by exact inverse mapping instead of resampling frame 1.
class Texture {
 public:
  explicit Texture(std::uint64_t seed, int waves = 256,
                   double min_wavelength = 8.0, double max_wavelength = 32.0);
  double operator()(double x, double y) const;
  // Maps the raw texture to [0, 1] around mid-grey (3 sigma to the clip).
  double intensity(double x, double y) const;

 private:
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::vector<Wave> waves_;
  double rms_ = 1.0;
};

Scene synth_scene(const SceneSpec& spec);

// Exact backward motion field (frame 2 -> frame 1) at every frame-2 pixel.
FlowField analytic_backward_flow(const SceneSpec& spec);

// Rotation by angle_deg and isotropic zoom about the image centre, followed
// by a translation.
Affine affine_about_center(int width, int height, double angle_deg, double zoom,
                           double tx = 0.0, double ty = 0.0);

}  // namespace otflow
