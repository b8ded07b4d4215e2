#pragma once

// Rectified pinhole stereo rig.
//
// World frame: origin midway between the optical centres, x lateral (toward
// the right camera), y up, z forward along the shared optical axis. The left
// centre sits at (-b/2, 0, 0) and the right one at (+b/2, 0, 0). Image rows
// grow downward, so v = v0 - f*y/z.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

#include "flyswarm/error.hpp"

namespace flyswarm {

using Rng = std::mt19937_64;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Real-valued image coordinates; x is the column, y the row.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
};

/// Integer pixel index.
struct Pixel {
  int col = 0;
  int row = 0;
  friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
};

/// Round half up to the nearest pixel centre.
inline Pixel to_pixel(PixelCoord p) {
  return {static_cast<int>(std::floor(p.x + 0.5)), static_cast<int>(std::floor(p.y + 0.5))};
}

struct CameraIntrinsics {
  double focal_length_px = 500.0;
  double u0 = 320.0;
  double v0 = 240.0;
  int image_width = 640;
  int image_height = 480;

  void validate() const {
    if (!(focal_length_px > 0.0) || !std::isfinite(focal_length_px))
      throw InvalidInput("focal_length_px must be positive");
    if (image_width <= 0 || image_height <= 0) throw InvalidInput("image size must be positive");
    if (!(u0 >= 0.0 && u0 < image_width) || !(v0 >= 0.0 && v0 < image_height))
      throw InvalidInput("principal point must lie inside the image");
  }
};

struct StereoRig {
  CameraIntrinsics intrinsics;
  double baseline_m = 0.4;
  double camera_height_m = 1.2;
  double z_min_m = 1.0;
  double z_max_m = 20.0;

  void validate() const {
    intrinsics.validate();
    if (!(baseline_m > 0.0)) throw InvalidInput("baseline_m must be positive");
    if (!(camera_height_m >= 0.0)) throw InvalidInput("camera_height_m must be non-negative");
    if (!(z_min_m > 0.0 && z_min_m < z_max_m) || !std::isfinite(z_max_m))
      throw InvalidInput("search depth bounds must satisfy 0 < z_min_m < z_max_m");
  }

  double disparity_at(double z) const { return intrinsics.focal_length_px * baseline_m / z; }
};

/// Depths below this are projected as if they were at the floor and reported invisible.
inline constexpr double kMinProjectionDepth = 0.01;

struct Projection {
  PixelCoord left;
  PixelCoord right;
  bool visible = false;
};

/// True when both coordinates keep a `margin_px` border inside a width x height raster.
inline bool inside_with_margin(PixelCoord p, int width, int height, int margin_px) {
  return p.x >= margin_px && p.x <= width - 1 - margin_px && p.y >= margin_px &&
         p.y <= height - 1 - margin_px;
}

/// Projects a world point into both cameras. `visible` requires the whole
/// (2*margin_px+1)^2 window around each projection to fall inside the image.
inline Projection project(const StereoRig& rig, const Vec3& point, int margin_px = 0) {
  if (!point.finite()) throw InvalidInput("project: non-finite world coordinates");
  const auto& k = rig.intrinsics;
  const double z = std::max(point.z, kMinProjectionDepth);
  const double half_b = 0.5 * rig.baseline_m;
  const double row = k.v0 - k.focal_length_px * point.y / z;
  Projection p;
  p.left = {k.u0 + k.focal_length_px * (point.x + half_b) / z, row};
  p.right = {k.u0 + k.focal_length_px * (point.x - half_b) / z, row};
  p.visible = point.z >= kMinProjectionDepth &&
              inside_with_margin(p.left, k.image_width, k.image_height, margin_px) &&
              inside_with_margin(p.right, k.image_width, k.image_height, margin_px);
  return p;
}

/// Lateral and vertical extent of the search volume at one depth.
struct DepthSlice {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool empty() const { return x_min > x_max || y_min > y_max; }
};

struct Box3 {
  Vec3 lo;
  Vec3 hi;
  double volume() const { return (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z); }
  Vec3 extent() const { return hi - lo; }
};

/// The depth-bounded intersection of both fields of view, shrunk so the
/// fitness window of every contained point stays inside both images.
/// Every bound is linear in z, so the volume is a convex truncated frustum.
class SearchVolume {
 public:
  SearchVolume(const StereoRig& rig, int margin_px) : rig_(rig), margin_(margin_px) {
    rig_.validate();
    if (margin_ < 0) throw InvalidInput("margin_px must be non-negative");
    const auto& k = rig_.intrinsics;
    const double inv_f = 1.0 / k.focal_length_px;
    // x_R >= m  and  x_L <= W-1-m
    x_lo_slope_ = (margin_ - k.u0) * inv_f;
    x_hi_slope_ = (k.image_width - 1 - margin_ - k.u0) * inv_f;
    // row <= H-1-m  and  row >= m
    y_lo_slope_ = (k.v0 - (k.image_height - 1 - margin_)) * inv_f;
    y_hi_slope_ = (k.v0 - margin_) * inv_f;
    if (slice(rig_.z_max_m).empty())
      throw InvalidInput("search volume is empty: image too small for the margin or baseline too wide");
  }

  const StereoRig& rig() const { return rig_; }
  int margin_px() const { return margin_; }
  double z_min() const { return rig_.z_min_m; }
  double z_max() const { return rig_.z_max_m; }

  DepthSlice slice(double z) const {
    const double half_b = 0.5 * rig_.baseline_m;
    return {x_lo_slope_ * z + half_b, x_hi_slope_ * z - half_b, y_lo_slope_ * z, y_hi_slope_ * z};
  }

  bool contains(const Vec3& p) const {
    if (!p.finite() || p.z < rig_.z_min_m || p.z > rig_.z_max_m) return false;
    return project(rig_, p, margin_).visible;
  }

  /// Axis-aligned box enclosing the volume. Bounds are linear in z, so the
  /// extremes occur on the end slices.
  Box3 bounding_box() const {
    const DepthSlice a = slice(rig_.z_min_m);
    const DepthSlice b = slice(rig_.z_max_m);
    return {{std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min), rig_.z_min_m},
            {std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max), rig_.z_max_m}};
  }

  /// Exact volume: integral of slice width * height over the admissible depths.
  double volume() const {
    // width(z) = a*z - b (clipped at 0), height(z) = c*z
    const double a = x_hi_slope_ - x_lo_slope_;
    const double b = rig_.baseline_m;
    const double c = y_hi_slope_ - y_lo_slope_;
    const double z0 = std::max(rig_.z_min_m, b / a);
    const double z1 = rig_.z_max_m;
    if (z1 <= z0) return 0.0;
    auto antiderivative = [&](double z) { return c * (a * z * z * z / 3.0 - b * z * z / 2.0); };
    return antiderivative(z1) - antiderivative(z0);
  }

  /// Uniform sample by rejection from the bounding box. When `draws` is
  /// non-null it receives the number of box draws consumed.
  Vec3 sample(Rng& rng, std::size_t* draws = nullptr) const {
    const Box3 box = bounding_box();
    std::uniform_real_distribution<double> ux(box.lo.x, box.hi.x);
    std::uniform_real_distribution<double> uy(box.lo.y, box.hi.y);
    std::uniform_real_distribution<double> uz(box.lo.z, box.hi.z);
    std::size_t n = 0;
    for (;;) {
      ++n;
      const double x = ux(rng);
      const double y = uy(rng);
      const double z = uz(rng);
      const Vec3 p{x, y, z};
      if (contains(p)) {
        if (draws) *draws = n;
        return p;
      }
    }
  }

  /// Moves a point into the volume: depth first, then x and y onto the
  /// slice at that depth. Points already inside are returned unchanged.
  Vec3 clamp(Vec3 p) const {
    if (contains(p)) return p;
    if (!std::isfinite(p.z)) p.z = 0.5 * (rig_.z_min_m + rig_.z_max_m);
    p.z = std::clamp(p.z, rig_.z_min_m, rig_.z_max_m);
    const DepthSlice s = slice(p.z);
    const double mid_x = 0.5 * (s.x_min + s.x_max);
    const double mid_y = 0.5 * (s.y_min + s.y_max);
    if (!std::isfinite(p.x)) p.x = mid_x;
    if (!std::isfinite(p.y)) p.y = mid_y;
    // Projection round-off can put an exact boundary value a hair outside;
    // shrink the slice until the clamped point projects inside.
    for (double shrink = 1e-12; shrink < 0.5; shrink *= 10.0) {
      const double dx = shrink * (s.x_max - s.x_min);
      const double dy = shrink * (s.y_max - s.y_min);
      const Vec3 q{std::clamp(p.x, s.x_min + dx, s.x_max - dx),
                   std::clamp(p.y, s.y_min + dy, s.y_max - dy), p.z};
      if (contains(q)) return q;
    }
    return {mid_x, mid_y, p.z};
  }

 private:
  StereoRig rig_;
  int margin_;
  double x_lo_slope_ = 0.0;
  double x_hi_slope_ = 0.0;
  double y_lo_slope_ = 0.0;
  double y_hi_slope_ = 0.0;
};

inline SearchVolume search_volume(const StereoRig& rig, int margin_px) { return SearchVolume(rig, margin_px); }

inline Vec3 sample_point(const SearchVolume& volume, Rng& rng) { return volume.sample(rng); }

}  // namespace flyswarm
