#pragma once

#include <vector>

#include "thermolio/common.hpp"

namespace thermolio {

// Row-major raster of raw digital numbers. Pixel (u, v) = (column, row),
// centers at integer coordinates.
struct ThermalFrame {
  int width = 0;
  int height = 0;
  double timestamp = 0.0;
  std::vector<float> dn;

  ThermalFrame() = default;
  ThermalFrame(int w, int h, double t = 0.0, float fill = 0.0f)
      : width(w), height(h), timestamp(t), dn(static_cast<std::size_t>(w) * h, fill) {}

  bool empty() const { return width <= 0 || height <= 0; }

  float& at(int u, int v) { return dn[static_cast<std::size_t>(v) * width + u]; }
  float at(int u, int v) const { return dn[static_cast<std::size_t>(v) * width + u]; }

  bool contains(int u, int v) const {
    return u >= 0 && u < width && v >= 0 && v < height;
  }

  // Bilinear sample; valid for u in [0, width-1], v in [0, height-1].
  double sample_bilinear(double u, double v) const {
    const int u0 = std::clamp(static_cast<int>(std::floor(u)), 0, width - 2);
    const int v0 = std::clamp(static_cast<int>(std::floor(v)), 0, height - 2);
    const double fu = std::clamp(u - u0, 0.0, 1.0);
    const double fv = std::clamp(v - v0, 0.0, 1.0);
    return (1.0 - fv) * ((1.0 - fu) * at(u0, v0) + fu * at(u0 + 1, v0)) +
           fv * ((1.0 - fu) * at(u0, v0 + 1) + fu * at(u0 + 1, v0 + 1));
  }
};

}  // namespace thermolio
