#include "otflow/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "otflow/image_io.hpp"

namespace otflow {

const std::vector<std::array<std::uint8_t, 3>>& color_wheel() {
  static const std::vector<std::array<std::uint8_t, 3>> wheel = [] {
    constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
    std::vector<std::array<std::uint8_t, 3>> w;
    auto ramp = [](int i, int n) {
      return static_cast<std::uint8_t>(std::floor(255.0 * i / n));
    };
    for (int i = 0; i < kRY; ++i) w.push_back({255, ramp(i, kRY), 0});
    for (int i = 0; i < kYG; ++i) w.push_back({static_cast<std::uint8_t>(255 - ramp(i, kYG)), 255, 0});
    for (int i = 0; i < kGC; ++i) w.push_back({0, 255, ramp(i, kGC)});
    for (int i = 0; i < kCB; ++i) w.push_back({0, static_cast<std::uint8_t>(255 - ramp(i, kCB)), 255});
    for (int i = 0; i < kBM; ++i) w.push_back({ramp(i, kBM), 0, 255});
    for (int i = 0; i < kMR; ++i) w.push_back({255, 0, static_cast<std::uint8_t>(255 - ramp(i, kMR))});
    return w;
  }();
  return wheel;
}

std::array<std::uint8_t, 3> flow_color(double nu, double nv) {
  const auto& wheel = color_wheel();
  const int n = static_cast<int>(wheel.size());
  const double rad = std::hypot(nu, nv);
  // Angle measured from +u, mapped so that 0 rad lands on entry 0 and the
  // wheel is traversed as in the Middlebury reference coder.
  double a = std::atan2(nv, nu) / std::numbers::pi - 1.0;
  if (a < -1.0) a += 2.0;
  const double fk = (a + 1.0) / 2.0 * (n - 1);
  const int k0 = static_cast<int>(std::floor(fk));
  const int k1 = (k0 + 1) % n;
  const double f = fk - k0;
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    double col = ((1.0 - f) * wheel[k0 % n][c] + f * wheel[k1][c]) / 255.0;
    if (rad <= 1.0) {
      col = 1.0 - rad * (1.0 - col);
    } else {
      col *= 0.75;
    }
    out[c] = static_cast<std::uint8_t>(std::floor(255.0 * col));
  }
  return out;
}

double percentile_magnitude(const FlowField& flow, double q) {
  if (flow.pixel_count() == 0) return 0.0;
  std::vector<double> mag(flow.pixel_count());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::hypot(flow.data()[2 * i], flow.data()[2 * i + 1]);
  }
  std::sort(mag.begin(), mag.end());
  const double pos = q * static_cast<double>(mag.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, mag.size() - 1);
  return mag[lo] + (pos - static_cast<double>(lo)) * (mag[hi] - mag[lo]);
}

RgbImage visualize_flow(const FlowField& flow, std::optional<double> max_mag) {
  validate(flow);
  const double norm = max_mag.value_or(percentile_magnitude(flow));
  RgbImage img{flow.width(), flow.height(),
               std::vector<std::uint8_t>(flow.pixel_count() * 3, 255)};
  if (!(norm > 0.0)) return img;
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    const auto c = flow_color(flow.data()[2 * i] / norm, flow.data()[2 * i + 1] / norm);
    std::copy(c.begin(), c.end(), img.data.begin() + 3 * i);
  }
  return img;
}

void write_rgb_png(const RgbImage& image, const std::filesystem::path& path) {
  RawPng png;
  png.width = image.width;
  png.height = image.height;
  png.channels = 3;
  png.bit_depth = 8;
  png.samples.assign(image.data.begin(), image.data.end());
  write_file(path, encode_png(png));
}

}  // namespace otflow
