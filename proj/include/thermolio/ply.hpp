#pragma once

#include <cstring>
#include <fstream>
#include <string>

#include "thermolio/common.hpp"
#include "thermolio/fusion.hpp"

namespace thermolio {

// PLY with per-vertex x, y, z, temperature (degrees C) and confidence, all
// float32. Binary little-endian by default; ASCII for inspection.
inline void write_ply(const std::string& path, const ThermalPointCloud& cloud,
                      bool binary = true) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("write_ply: cannot open " + path);
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property float temperature\n"
      << "property float confidence\n"
      << "end_header\n";
  if (binary) {
    for (const ThermalPoint& p : cloud.points) {
      const float row[5] = {static_cast<float>(p.position.x()),
                            static_cast<float>(p.position.y()),
                            static_cast<float>(p.position.z()),
                            p.temperature_c, p.confidence};
      out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
  } else {
    char line[160];
    for (const ThermalPoint& p : cloud.points) {
      std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %.3f %.4f\n",
                    p.position.x(), p.position.y(), p.position.z(),
                    static_cast<double>(p.temperature_c),
                    static_cast<double>(p.confidence));
      out << line;
    }
  }
  if (!out) throw IoError("write_ply: write failed for " + path);
}

inline ThermalPointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_ply: cannot open " + path);
  std::string line;
  bool binary = false;
  std::size_t count = 0;
  int property_count = 0;
  while (std::getline(in, line)) {
    if (line.rfind("format", 0) == 0) binary = line.find("binary") != std::string::npos;
    if (line.rfind("element vertex", 0) == 0) count = std::stoul(line.substr(15));
    if (line.rfind("property", 0) == 0) ++property_count;
    if (line == "end_header") break;
  }
  if (property_count != 5) throw IoError("read_ply: unexpected vertex layout in " + path);
  ThermalPointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    float row[5];
    if (binary) {
      in.read(reinterpret_cast<char*>(row), sizeof(row));
      if (!in) throw IoError("read_ply: truncated body in " + path);
    } else {
      for (float& v : row) {
        if (!(in >> v)) throw IoError("read_ply: truncated body in " + path);
      }
    }
    ThermalPoint p;
    p.position = Vec3(row[0], row[1], row[2]);
    p.temperature_c = row[3];
    p.confidence = row[4];
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace thermolio
