#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "thermolio/camera.hpp"
#include "thermolio/canny.hpp"
#include "thermolio/common.hpp"
#include "thermolio/geometry.hpp"
#include "thermolio/imu.hpp"
#include "thermolio/intrinsic_calibration.hpp"
#include "thermolio/lidar_edges.hpp"
#include "thermolio/radiometry.hpp"
#include "thermolio/raster.hpp"
#include "thermolio/trajectory.hpp"

namespace thermolio::io {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw IoError(where + ": cannot parse number '" + s + "'");
  }
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Line-oriented key=value files ('#' starts a comment).
// ---------------------------------------------------------------------------

class KvFile {
 public:
  KvFile() = default;

  static KvFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    KvFile kv;
    kv.path_ = path;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw IoError(path + ":" + std::to_string(line_no) + ": expected key=value");
      }
      kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& key : order_) out << key << "=" << values_.at(key) << "\n";
    if (!out) throw IoError("write failed for " + path);
  }

  void set(const std::string& key, const std::string& value) {
    if (values_.find(key) == values_.end()) order_.push_back(key);
    values_[key] = value;
  }
  void set_double(const std::string& key, double v) { set(key, fmt_double(v)); }
  void set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }
  void set_vec3(const std::string& key, const Vec3& v) {
    set(key, fmt_double(v.x()) + "," + fmt_double(v.y()) + "," + fmt_double(v.z()));
  }
  void set_mat3(const std::string& key, const Mat3& m) {
    std::string s;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (!s.empty()) s += ",";
        s += fmt_double(m(r, c));
      }
    }
    set(key, s);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw IoError(path_ + ": missing key '" + key + "'");
    return it->second;
  }
  double get_double(const std::string& key) const {
    return parse_double(get(key), path_ + " key '" + key + "'");
  }
  long long get_int(const std::string& key) const {
    return static_cast<long long>(get_double(key));
  }
  Vec3 get_vec3(const std::string& key) const {
    const auto parts = split(get(key));
    if (parts.size() != 3) throw IoError(path_ + ": key '" + key + "' is not a 3-vector");
    return Vec3(parse_double(parts[0], key), parse_double(parts[1], key),
                parse_double(parts[2], key));
  }
  Mat3 get_mat3(const std::string& key) const {
    const auto parts = split(get(key));
    if (parts.size() != 9) throw IoError(path_ + ": key '" + key + "' is not a 3x3 matrix");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = parse_double(parts[3 * r + c], key);
    }
    return m;
  }
  const std::vector<std::string>& keys() const { return order_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  std::string path_ = "<memory>";
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// Stream formats
// ---------------------------------------------------------------------------

inline void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t,wx,wy,wz,ax,ay,az\n";
  for (const auto& s : samples) {
    out << fmt_double(s.t) << "," << fmt_double(s.angular_rate.x()) << ","
        << fmt_double(s.angular_rate.y()) << "," << fmt_double(s.angular_rate.z()) << ","
        << fmt_double(s.specific_force.x()) << "," << fmt_double(s.specific_force.y())
        << "," << fmt_double(s.specific_force.z()) << "\n";
  }
}

inline std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ImuSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "t,wx,wy,wz,ax,ay,az") continue;
    const auto f = split(line);
    if (f.size() != 7) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 7 fields");
    }
    const std::string where = path + ":" + std::to_string(line_no);
    ImuSample s;
    s.t = parse_double(f[0], where);
    s.angular_rate =
        Vec3(parse_double(f[1], where), parse_double(f[2], where), parse_double(f[3], where));
    s.specific_force =
        Vec3(parse_double(f[4], where), parse_double(f[5], where), parse_double(f[6], where));
    if (!samples.empty() && s.t <= samples.back().t) {
      throw IoError(where + ": IMU timestamps must be strictly increasing");
    }
    samples.push_back(s);
  }
  return samples;
}

inline void write_scan_csv(const std::string& path,
                           const std::vector<TimedLidarPoint>& points) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t_point,ox,oy,oz,d\n";
  for (const auto& p : points) {
    out << fmt_double(p.time) << "," << fmt_double(p.direction.x()) << ","
        << fmt_double(p.direction.y()) << "," << fmt_double(p.direction.z()) << ","
        << fmt_double(p.depth) << "\n";
  }
}

inline std::vector<TimedLidarPoint> read_scan_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<TimedLidarPoint> points;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "t_point,ox,oy,oz,d") continue;
    const auto f = split(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 5) throw IoError(where + ": expected 5 fields");
    TimedLidarPoint p;
    p.time = parse_double(f[0], where);
    p.direction =
        Vec3(parse_double(f[1], where), parse_double(f[2], where), parse_double(f[3], where));
    p.depth = parse_double(f[4], where);
    if (std::abs(p.direction.norm() - 1.0) > 1e-6) {
      throw IoError(where + ": direction is not unit length");
    }
    if (!(p.depth > 0.0)) throw IoError(where + ": depth must be positive");
    points.push_back(p);
  }
  return points;
}

struct TrajectoryRow {
  double t = 0.0;
  SE3 pose;
};

inline void write_trajectory_csv(const std::string& path,
                                 const std::vector<TrajectoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t,qw,qx,qy,qz,px,py,pz\n";
  for (const auto& row : rows) {
    Eigen::Quaterniond q(row.pose.R);
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    out << fmt_double(row.t) << "," << fmt_double(q.w()) << "," << fmt_double(q.x())
        << "," << fmt_double(q.y()) << "," << fmt_double(q.z()) << ","
        << fmt_double(row.pose.t.x()) << "," << fmt_double(row.pose.t.y()) << ","
        << fmt_double(row.pose.t.z()) << "\n";
  }
}

inline std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<TrajectoryRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "t,qw,qx,qy,qz,px,py,pz") continue;
    const auto f = split(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 8) throw IoError(where + ": expected 8 fields");
    TrajectoryRow row;
    row.t = parse_double(f[0], where);
    Eigen::Quaterniond q(parse_double(f[1], where), parse_double(f[2], where),
                         parse_double(f[3], where), parse_double(f[4], where));
    row.pose.R = q.normalized().toRotationMatrix();
    row.pose.t = Vec3(parse_double(f[5], where), parse_double(f[6], where),
                      parse_double(f[7], where));
    rows.push_back(row);
  }
  return rows;
}

inline void write_calibration_points_csv(const std::string& path,
                                         const std::vector<CalibrationPoint>& points) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "temperature_c,mean_dn\n";
  for (const auto& p : points) {
    out << fmt_double(kelvin_to_celsius(p.temperature_k)) << "," << fmt_double(p.mean_dn)
        << "\n";
  }
}

inline std::vector<CalibrationPoint> read_calibration_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<CalibrationPoint> points;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "temperature_c,mean_dn") continue;
    const auto f = split(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 2) throw IoError(where + ": expected 2 fields");
    points.push_back(
        {celsius_to_kelvin(parse_double(f[0], where)), parse_double(f[1], where)});
  }
  return points;
}

// Planar calibration views: view_id,Xw,Yw,u,v rows, grouped by view id.
inline void write_views_csv(const std::string& path,
                            const std::vector<PlanarObservation>& views) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "view_id,Xw,Yw,u,v\n";
  for (std::size_t v = 0; v < views.size(); ++v) {
    for (std::size_t i = 0; i < views[v].board_points.size(); ++i) {
      out << v << "," << fmt_double(views[v].board_points[i].x()) << ","
          << fmt_double(views[v].board_points[i].y()) << ","
          << fmt_double(views[v].image_points[i].x()) << ","
          << fmt_double(views[v].image_points[i].y()) << "\n";
    }
  }
}

inline std::vector<PlanarObservation> read_views_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<long long, PlanarObservation> by_view;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "view_id,Xw,Yw,u,v") continue;
    const auto f = split(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 5) throw IoError(where + ": expected 5 fields");
    const long long view = static_cast<long long>(parse_double(f[0], where));
    by_view[view].board_points.emplace_back(parse_double(f[1], where),
                                            parse_double(f[2], where));
    by_view[view].image_points.emplace_back(parse_double(f[3], where),
                                            parse_double(f[4], where));
  }
  std::vector<PlanarObservation> views;
  for (auto& [id, obs] : by_view) views.push_back(std::move(obs));
  return views;
}

// Debug exports for edge features.
inline void write_edge_pixels_csv(const std::string& path,
                                  const std::vector<EdgePixel>& pixels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "u,v,gx,gy\n";
  for (const auto& e : pixels) {
    out << fmt_double(e.uv.x()) << "," << fmt_double(e.uv.y()) << ","
        << fmt_double(e.gradient_dir.x()) << "," << fmt_double(e.gradient_dir.y()) << "\n";
  }
}

inline void write_lidar_edges_csv(const std::string& path,
                                  const std::vector<LidarEdge>& edges) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "x,y,z,dx,dy,dz\n";
  for (const auto& edge : edges) {
    for (const auto& s : edge.samples) {
      out << fmt_double(s.x()) << "," << fmt_double(s.y()) << "," << fmt_double(s.z())
          << "," << fmt_double(edge.direction.x()) << "," << fmt_double(edge.direction.y())
          << "," << fmt_double(edge.direction.z()) << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// 16-bit PGM frames (binary P5, maxval 65535, big-endian samples per spec)
// ---------------------------------------------------------------------------

inline void write_pgm16(const std::string& path, const ThermalFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
  for (float value : frame.dn) {
    const std::uint16_t dn =
        static_cast<std::uint16_t>(std::clamp(value, 0.0f, 65535.0f));
    const unsigned char bytes[2] = {static_cast<unsigned char>(dn >> 8),
                                    static_cast<unsigned char>(dn & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
  }
  if (!out) throw IoError("write failed for " + path);
}

inline ThermalFrame read_pgm16(const std::string& path, double timestamp = 0.0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 65535 || w <= 0 || h <= 0) {
    throw IoError(path + ": not a 16-bit binary PGM");
  }
  in.get();  // single whitespace after header
  ThermalFrame frame(w, h, timestamp);
  for (auto& value : frame.dn) {
    unsigned char bytes[2];
    in.read(reinterpret_cast<char*>(bytes), 2);
    if (!in) throw IoError(path + ": truncated pixel data");
    value = static_cast<float>((bytes[0] << 8) | bytes[1]);
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Model persistence
// ---------------------------------------------------------------------------

inline void save_intrinsics(const std::string& path, const Intrinsics& intr) {
  KvFile kv;
  kv.set_double("fx", intr.fx);
  kv.set_double("fy", intr.fy);
  kv.set_double("cx", intr.cx);
  kv.set_double("cy", intr.cy);
  kv.set_double("skew", intr.skew);
  const auto d = intr.dist.as_array();
  kv.set("dist", fmt_double(d[0]) + "," + fmt_double(d[1]) + "," + fmt_double(d[2]) +
                     "," + fmt_double(d[3]) + "," + fmt_double(d[4]));
  kv.set_int("width", intr.width);
  kv.set_int("height", intr.height);
  kv.save(path);
}

inline Intrinsics load_intrinsics(const std::string& path) {
  const KvFile kv = KvFile::load(path);
  Intrinsics intr;
  intr.fx = kv.get_double("fx");
  intr.fy = kv.get_double("fy");
  intr.cx = kv.get_double("cx");
  intr.cy = kv.get_double("cy");
  intr.skew = kv.has("skew") ? kv.get_double("skew") : 0.0;
  const auto parts = split(kv.get("dist"));
  if (parts.size() != 5) throw IoError(path + ": dist must have 5 coefficients");
  intr.dist = Distortion::from_array({parse_double(parts[0], "dist"),
                                      parse_double(parts[1], "dist"),
                                      parse_double(parts[2], "dist"),
                                      parse_double(parts[3], "dist"),
                                      parse_double(parts[4], "dist")});
  intr.width = static_cast<int>(kv.get_int("width"));
  intr.height = static_cast<int>(kv.get_int("height"));
  return intr;
}

inline void save_extrinsic(const std::string& path, const SE3& extrinsic, bool converged,
                           int iterations, double final_cost) {
  KvFile kv;
  kv.set_mat3("rotation", extrinsic.R);
  kv.set_vec3("translation", extrinsic.t);
  kv.set_int("converged", converged ? 1 : 0);
  kv.set_int("iterations", iterations);
  kv.set_double("final_cost", final_cost);
  kv.save(path);
}

inline SE3 load_extrinsic(const std::string& path) {
  const KvFile kv = KvFile::load(path);
  SE3 t(kv.get_mat3("rotation"), kv.get_vec3("translation"));
  if (!is_rotation(t.R, 1e-6)) throw IoError(path + ": rotation block is not orthonormal");
  t.R = orthonormalize(t.R);
  return t;
}

inline void save_radiometric(const std::string& path, const RadiometricModel& model) {
  KvFile kv;
  kv.set_double("responsivity", model.responsivity);
  kv.set_double("offset", model.offset);
  kv.set_double("lambda_min", model.band.lambda_min);
  kv.set_double("lambda_max", model.band.lambda_max);
  kv.set_double("t_min_k", model.t_min_k);
  kv.set_double("t_max_k", model.t_max_k);
  kv.save(path);
}

inline RadiometricModel load_radiometric(const std::string& path) {
  const KvFile kv = KvFile::load(path);
  RadiometricModel model;
  model.responsivity = kv.get_double("responsivity");
  model.offset = kv.get_double("offset");
  model.band = {kv.get_double("lambda_min"), kv.get_double("lambda_max")};
  model.t_min_k = kv.get_double("t_min_k");
  model.t_max_k = kv.get_double("t_max_k");
  if (!(model.responsivity > 0.0)) throw IoError(path + ": responsivity must be positive");
  return model;
}

// ---------------------------------------------------------------------------
// Checksums and manifest
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for checksumming");
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

inline void write_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.kv") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  KvFile kv;
  kv.set_int("files", static_cast<long long>(files.size()));
  for (const auto& rel : files) {
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a_file((fs::path(dir) / rel).string())));
    kv.set(rel, std::string(hex) + "," +
                    std::to_string(fs::file_size(fs::path(dir) / rel)));
  }
  kv.save((fs::path(dir) / "manifest.kv").string());
}

}  // namespace thermolio::io
