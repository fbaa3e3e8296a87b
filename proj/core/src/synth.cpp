#include "otflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string>

#include "otflow/parallel.hpp"

namespace otflow {

namespace {

struct Inverse {
  std::array<double, 6> m;
};

Inverse invert(const Affine& a) {
  const auto& m = a.m;
  const double det = m[0] * m[4] - m[1] * m[3];
  if (!(std::abs(det) >= 1e-9) || !std::isfinite(det)) {
    throw Error(ErrorCode::kDegenerateAffine,
                "synth_scene: affine matrix is not invertible (det=" +
                    std::to_string(det) + ")");
  }
  const double ia = m[4] / det, ib = -m[1] / det;
  const double id = -m[3] / det, ie = m[0] / det;
  return {{ia, ib, -(ia * m[2] + ib * m[5]), id, ie, -(id * m[2] + ie * m[5])}};
}

bool inside(const MovingRect& r, double x, double y) {
  return x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1;
}

// Index of the front-most layer covering (x, y) in frame 1 (shift = false)
// or frame 2 (shift = true); -1 is the background.
int layer_at(const Layered& l, double x, double y, bool shift) {
  for (int i = static_cast<int>(l.layers.size()) - 1; i >= 0; --i) {
    const MovingRect& r = l.layers[i];
    const double sx = shift ? x - r.du : x;
    const double sy = shift ? y - r.dv : y;
    if (inside(r, sx, sy)) return i;
  }
  return -1;
}

template <typename Fn>
void for_each_pixel(int width, int height, Fn&& fn) {
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t yi) {
    for (int x = 0; x < width; ++x) fn(x, static_cast<int>(yi));
  });
}

}  // namespace

Texture::Texture(std::uint64_t seed, int waves, double min_wavelength,
                 double max_wavelength) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = std::log(min_wavelength);
  const double hi = std::log(max_wavelength);
  double power = 0.0;
  waves_.reserve(static_cast<std::size_t>(waves));
  for (int i = 0; i < waves; ++i) {
    const double lambda = std::exp(lo + (hi - lo) * unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double k = 2.0 * std::numbers::pi / lambda;
    const double amp = lambda / max_wavelength;
    waves_.push_back({k * std::cos(theta), k * std::sin(theta), phase, amp});
    power += 0.5 * amp * amp;
  }
  rms_ = power > 0.0 ? std::sqrt(power) : 1.0;
}

double Texture::operator()(double x, double y) const {
  double acc = 0.0;
  for (const Wave& w : waves_) acc += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
  return acc;
}

double Texture::intensity(double x, double y) const {
  return std::clamp(0.5 + 0.5 * (*this)(x, y) / (3.0 * rms_), 0.0, 1.0);
}

void validate(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || spec.width % 4 != 0 ||
      spec.height % 4 != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "SceneSpec: dimensions must be positive multiples of 4, got " +
                    std::to_string(spec.width) + "x" + std::to_string(spec.height));
  }
  auto finite = [](std::initializer_list<double> xs) {
    for (double x : xs) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kNonFiniteValue, "SceneSpec: non-finite motion parameter");
      }
    }
  };
  if (const auto* t = std::get_if<Translation>(&spec.motion)) finite({t->du, t->dv});
  if (const auto* l = std::get_if<Layered>(&spec.motion)) {
    for (const MovingRect& r : l->layers) finite({r.x0, r.y0, r.x1, r.y1, r.du, r.dv});
  }
  if (const auto* a = std::get_if<Affine>(&spec.motion)) {
    for (double x : a->m) finite({x});
    invert(*a);
  }
}

Scene synth_scene(const SceneSpec& spec) {
  validate(spec);
  const int W = spec.width;
  const int H = spec.height;
  Scene scene{{Image(W, H, 1), Image(W, H, 1)},
              FlowField(W, H, Scale::kFull),
              OcclusionMap(W, H, Scale::kFull)};
  Image& i1 = scene.images.first;
  Image& i2 = scene.images.second;
  const Texture background(spec.texture_seed);

  auto in_frame = [&](double x, double y) {
    return x >= 0.0 && x <= W - 1 && y >= 0.0 && y <= H - 1;
  };

  if (const auto* t = std::get_if<Translation>(&spec.motion)) {
    for_each_pixel(W, H, [&](int x, int y) {
      i1.at(x, y) = background.intensity(x, y);
      i2.at(x, y) = background.intensity(x - t->du, y - t->dv);
      scene.flow.set(x, y, t->du, t->dv);
      scene.occlusion.at(x, y) = in_frame(x + t->du, y + t->dv) ? 1.0 : 0.0;
    });
  } else if (const auto* a = std::get_if<Affine>(&spec.motion)) {
    const Inverse inv = invert(*a);
    const auto& m = a->m;
    for_each_pixel(W, H, [&](int x, int y) {
      i1.at(x, y) = background.intensity(x, y);
      i2.at(x, y) = background.intensity(inv.m[0] * x + inv.m[1] * y + inv.m[2],
                                         inv.m[3] * x + inv.m[4] * y + inv.m[5]);
      const double tx = m[0] * x + m[1] * y + m[2];
      const double ty = m[3] * x + m[4] * y + m[5];
      scene.flow.set(x, y, tx - x, ty - y);
      scene.occlusion.at(x, y) = in_frame(tx, ty) ? 1.0 : 0.0;
    });
  } else {
    const auto& l = std::get<Layered>(spec.motion);
    std::vector<Texture> textures;
    for (std::size_t i = 0; i < l.layers.size(); ++i) {
      textures.emplace_back(spec.texture_seed + 1 + i);
    }
    for_each_pixel(W, H, [&](int x, int y) {
      const int k1 = layer_at(l, x, y, false);
      i1.at(x, y) = k1 < 0 ? background.intensity(x, y) : textures[k1].intensity(x, y);
      const int k2 = layer_at(l, x, y, true);
      i2.at(x, y) = k2 < 0 ? background.intensity(x, y)
                           : textures[k2].intensity(x - l.layers[k2].du,
                                                    y - l.layers[k2].dv);
      const double du = k1 < 0 ? 0.0 : l.layers[k1].du;
      const double dv = k1 < 0 ? 0.0 : l.layers[k1].dv;
      scene.flow.set(x, y, du, dv);
      const double tx = x + du;
      const double ty = y + dv;
      scene.occlusion.at(x, y) =
          in_frame(tx, ty) && layer_at(l, tx, ty, true) == k1 ? 1.0 : 0.0;
    });
  }
  return scene;
}

FlowField analytic_backward_flow(const SceneSpec& spec) {
  validate(spec);
  FlowField back(spec.width, spec.height, Scale::kFull);
  if (const auto* t = std::get_if<Translation>(&spec.motion)) {
    for_each_pixel(spec.width, spec.height,
                   [&](int x, int y) { back.set(x, y, -t->du, -t->dv); });
  } else if (const auto* a = std::get_if<Affine>(&spec.motion)) {
    const Inverse inv = invert(*a);
    for_each_pixel(spec.width, spec.height, [&](int x, int y) {
      back.set(x, y, inv.m[0] * x + inv.m[1] * y + inv.m[2] - x,
               inv.m[3] * x + inv.m[4] * y + inv.m[5] - y);
    });
  } else {
    const auto& l = std::get<Layered>(spec.motion);
    for_each_pixel(spec.width, spec.height, [&](int x, int y) {
      const int k = layer_at(l, x, y, true);
      if (k >= 0) back.set(x, y, -l.layers[k].du, -l.layers[k].dv);
    });
  }
  return back;
}

Affine affine_about_center(int width, int height, double angle_deg, double zoom,
                           double tx, double ty) {
  const double rad = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad) * zoom;
  const double s = std::sin(rad) * zoom;
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  return Affine{{c, -s, cx - c * cx + s * cy + tx, s, c, cy - s * cx - c * cy + ty}};
}

}  // namespace otflow
