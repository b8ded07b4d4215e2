#pragma once

// Ground-truth stereo renderer: textured fronto-parallel rectangles over an
// optional textured road plane, uniform background elsewhere. Textures are
// indexed by surface coordinates, so both cameras see the same intensity at
// the same surface point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flyswarm/error.hpp"
#include "flyswarm/geometry.hpp"
#include "flyswarm/image.hpp"

namespace flyswarm {

struct TexturedRect {
  Vec3 center;
  double width_m = 1.0;
  double height_m = 1.0;
  std::uint64_t texture_seed = 0;
  double texture_cell_m = 0.05;
  std::uint8_t texture_min = 30;
  std::uint8_t texture_max = 200;

  void validate() const {
    if (!center.finite() || !(center.z > 0.0)) throw InvalidInput("rectangle centre must be finite with z > 0");
    if (!(width_m > 0.0) || !(height_m > 0.0)) throw InvalidInput("rectangle size must be positive");
    if (!(texture_cell_m > 0.0)) throw InvalidInput("texture_cell_m must be positive");
    if (texture_min > texture_max) throw InvalidInput("texture_min exceeds texture_max");
  }

  bool covers(double x, double y) const {
    return std::abs(x - center.x) <= 0.5 * width_m && std::abs(y - center.y) <= 0.5 * height_m;
  }
};

struct Scene {
  std::vector<TexturedRect> obstacles;
  std::optional<std::uint64_t> ground_texture_seed;
  double ground_texture_cell_m = 0.10;
  std::uint8_t ground_texture_min = 85;
  std::uint8_t ground_texture_max = 145;
  std::uint8_t background_grey = 170;
  /// Road colour when the ground is untextured; background_grey when unset.
  std::optional<std::uint8_t> ground_grey;

  void validate() const {
    for (const auto& r : obstacles) r.validate();
    if (!(ground_texture_cell_m > 0.0)) throw InvalidInput("ground_texture_cell_m must be positive");
    if (ground_texture_min > ground_texture_max) throw InvalidInput("ground_texture_min exceeds ground_texture_max");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic block noise: one uniform value per (seed, cell_u, cell_v).
inline std::uint8_t block_noise(std::uint64_t seed, double u, double v, double cell, std::uint8_t lo, std::uint8_t hi) {
  const auto iu = static_cast<std::int64_t>(std::floor(u / cell));
  const auto iv = static_cast<std::int64_t>(std::floor(v / cell));
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(iu));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iv) * 0x632be59bd9b4e019ULL);
  const std::uint64_t range = static_cast<std::uint64_t>(hi) - lo + 1;
  return static_cast<std::uint8_t>(lo + h % range);
}

}  // namespace detail

inline std::uint8_t rect_texture(const TexturedRect& r, double x, double y) {
  return detail::block_noise(r.texture_seed, x - (r.center.x - 0.5 * r.width_m), y - (r.center.y - 0.5 * r.height_m),
                             r.texture_cell_m, r.texture_min, r.texture_max);
}

inline std::uint8_t ground_texture(const Scene& scene, double x, double z) {
  if (!scene.ground_texture_seed) return scene.ground_grey.value_or(scene.background_grey);
  return detail::block_noise(*scene.ground_texture_seed, x, z, scene.ground_texture_cell_m, scene.ground_texture_min,
                             scene.ground_texture_max);
}

/// Intensity seen along the ray through pixel (col, row) of the camera
/// whose optical centre is at (centre_x, 0, 0).
inline std::uint8_t trace_ray(const Scene& scene, const StereoRig& rig, double centre_x, int col, int row) {
  const auto& k = rig.intrinsics;
  const double dx = (col - k.u0) / k.focal_length_px;
  const double dy = -(row - k.v0) / k.focal_length_px;

  double best_z = std::numeric_limits<double>::infinity();
  std::uint8_t value = scene.background_grey;
  // Ray points have z = t, so the hit depth orders surfaces front to back.
  for (const auto& r : scene.obstacles) {
    const double z = r.center.z;
    if (z >= best_z) continue;
    const double x = centre_x + z * dx;
    const double y = z * dy;
    if (r.covers(x, y)) {
      best_z = z;
      value = rect_texture(r, x, y);
    }
  }
  const bool has_ground = scene.ground_texture_seed.has_value() || scene.ground_grey.has_value();
  if (has_ground && dy < 0.0) {
    const double z = -rig.camera_height_m / dy;
    if (z < best_z) value = ground_texture(scene, centre_x + z * dx, z);
  }
  return value;
}

inline std::pair<Image, Image> render_stereo_pair(const Scene& scene, const StereoRig& rig) {
  rig.validate();
  scene.validate();
  const int w = rig.intrinsics.image_width;
  const int h = rig.intrinsics.image_height;
  Image left(w, h, 1);
  Image right(w, h, 1);
  const double half_b = 0.5 * rig.baseline_m;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      left.at(col, row) = trace_ray(scene, rig, -half_b, col, row);
      right.at(col, row) = trace_ray(scene, rig, +half_b, col, row);
    }
  }
  return {std::move(left), std::move(right)};
}

/// Depth of the nearest obstacle whose rectangle covers (x, y); the road plane is not counted.
inline std::optional<double> ground_truth_depth(const Scene& scene, const Vec3& point) {
  std::optional<double> best;
  for (const auto& r : scene.obstacles)
    if (r.covers(point.x, point.y) && (!best || r.center.z < *best)) best = r.center.z;
  return best;
}

enum class Preset { EmptyRoad, Pedestrian4m };

inline Preset parse_preset(const std::string& name) {
  if (name == "empty-road") return Preset::EmptyRoad;
  if (name == "pedestrian-4m") return Preset::Pedestrian4m;
  throw ConfigError("unknown preset '" + name + "' (expected empty-road or pedestrian-4m)");
}

inline const char* preset_name(Preset p) { return p == Preset::EmptyRoad ? "empty-road" : "pedestrian-4m"; }

/// Moderately textured road under a uniform sky; the pedestrian preset adds a
/// 0.5 x 1.7 m textured figure standing on the road 4 m ahead.
inline Scene make_preset(Preset preset, const StereoRig& rig) {
  Scene scene;
  scene.ground_texture_seed = 7;
  if (preset == Preset::Pedestrian4m) {
    TexturedRect person;
    person.width_m = 0.5;
    person.height_m = 1.7;
    person.center = {0.0, -rig.camera_height_m + 0.5 * person.height_m, 4.0};
    person.texture_seed = 11;
    person.texture_cell_m = 0.03;
    scene.obstacles.push_back(person);
  }
  return scene;
}

}  // namespace flyswarm
