#pragma once

#include <cmath>
#include <vector>

#include "thermolio/common.hpp"
#include "thermolio/raster.hpp"

namespace thermolio {

// One retained edge pixel with its unit gradient direction (the thermal
// gradient the orthogonality gate of the matcher checks against).
struct EdgePixel {
  Vec2 uv;
  Vec2 gradient_dir;
  double magnitude = 0.0;
};

namespace detail {

inline std::vector<float> gaussian_smooth(const ThermalFrame& frame, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  const int w = frame.width, h = frame.height;
  std::vector<float> tmp(static_cast<std::size_t>(w) * h);
  std::vector<float> out(static_cast<std::size_t>(w) * h);
  // Horizontal pass, clamped borders.
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[i + radius] * frame.at(std::clamp(u + i, 0, w - 1), v);
      }
      tmp[static_cast<std::size_t>(v) * w + u] = static_cast<float>(acc);
    }
  }
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[i + radius] * tmp[static_cast<std::size_t>(std::clamp(v + i, 0, h - 1)) * w + u];
      }
      out[static_cast<std::size_t>(v) * w + u] = static_cast<float>(acc);
    }
  }
  return out;
}

}  // namespace detail

// Canny: Gaussian smoothing, Sobel gradients, non-maximum suppression along
// the gradient direction, double-threshold hysteresis. Thresholds are on the
// Sobel gradient magnitude (DN per pixel, Sobel-scaled).
inline std::vector<EdgePixel> extract_thermal_edges(const ThermalFrame& frame,
                                                    double low, double high,
                                                    double sigma = 1.4) {
  if (frame.empty()) throw ValidationError("extract_thermal_edges: empty frame");
  if (!(low > 0.0) || !(high > low)) {
    throw ValidationError("extract_thermal_edges: need 0 < low < high");
  }
  const int w = frame.width, h = frame.height;
  const std::vector<float> smooth = detail::gaussian_smooth(frame, sigma);
  auto s = [&](int u, int v) -> double {
    return smooth[static_cast<std::size_t>(std::clamp(v, 0, h - 1)) * w +
                  std::clamp(u, 0, w - 1)];
  };

  std::vector<float> gx(static_cast<std::size_t>(w) * h, 0.0f);
  std::vector<float> gy(static_cast<std::size_t>(w) * h, 0.0f);
  std::vector<float> mag(static_cast<std::size_t>(w) * h, 0.0f);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const double dx = (s(u + 1, v - 1) + 2.0 * s(u + 1, v) + s(u + 1, v + 1)) -
                        (s(u - 1, v - 1) + 2.0 * s(u - 1, v) + s(u - 1, v + 1));
      const double dy = (s(u - 1, v + 1) + 2.0 * s(u, v + 1) + s(u + 1, v + 1)) -
                        (s(u - 1, v - 1) + 2.0 * s(u, v - 1) + s(u + 1, v - 1));
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      gx[idx] = static_cast<float>(dx);
      gy[idx] = static_cast<float>(dy);
      mag[idx] = static_cast<float>(std::hypot(dx, dy));
    }
  }

  // Non-maximum suppression with the gradient quantized to 4 sectors.
  enum : unsigned char { kNone = 0, kWeak = 1, kStrong = 2 };
  std::vector<unsigned char> label(static_cast<std::size_t>(w) * h, kNone);
  for (int v = 1; v < h - 1; ++v) {
    for (int u = 1; u < w - 1; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      const double m = mag[idx];
      if (m < low) continue;
      const double dx = gx[idx], dy = gy[idx];
      double m1, m2;
      const double adx = std::abs(dx), ady = std::abs(dy);
      if (adx >= 2.414 * ady) {  // ~horizontal gradient
        m1 = mag[idx - 1];
        m2 = mag[idx + 1];
      } else if (ady >= 2.414 * adx) {  // ~vertical gradient
        m1 = mag[idx - w];
        m2 = mag[idx + w];
      } else if (dx * dy > 0.0) {  // 45 degrees
        m1 = mag[idx - w - 1];
        m2 = mag[idx + w + 1];
      } else {  // 135 degrees
        m1 = mag[idx - w + 1];
        m2 = mag[idx + w - 1];
      }
      if (m >= m1 && m > m2) {
        label[idx] = m >= high ? kStrong : kWeak;
      }
    }
  }

  // Hysteresis: weak pixels survive only when 8-connected to a strong one.
  std::vector<std::size_t> stack;
  std::vector<bool> kept(label.size(), false);
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == kStrong && !kept[i]) {
      kept[i] = true;
      stack.push_back(i);
      while (!stack.empty()) {
        const std::size_t j = stack.back();
        stack.pop_back();
        const int ju = static_cast<int>(j % w), jv = static_cast<int>(j / w);
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            const int nu = ju + du, nv = jv + dv;
            if (nu < 0 || nu >= w || nv < 0 || nv >= h) continue;
            const std::size_t nidx = static_cast<std::size_t>(nv) * w + nu;
            if (!kept[nidx] && label[nidx] != kNone) {
              kept[nidx] = true;
              stack.push_back(nidx);
            }
          }
        }
      }
    }
  }

  std::vector<EdgePixel> edges;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      if (!kept[idx]) continue;
      EdgePixel e;
      e.uv = Vec2(u, v);
      e.magnitude = mag[idx];
      e.gradient_dir = Vec2(gx[idx], gy[idx]);
      const double n = e.gradient_dir.norm();
      if (n > 0.0) e.gradient_dir /= n;
      edges.push_back(e);
    }
  }
  return edges;
}

}  // namespace thermolio
