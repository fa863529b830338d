#pragma once

#include <cmath>

namespace loomcast {

/// Room coordinates in meters.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Axis-aligned box given by center and per-axis half extents.
struct Box {
  Vec3 center;
  Vec3 half_extent;

  Box inflated(double margin) const {
    return {center, {half_extent.x + margin, half_extent.y + margin, half_extent.z + margin}};
  }

  bool contains(const Vec3& p) const {
    return std::abs(p.x - center.x) <= half_extent.x && std::abs(p.y - center.y) <= half_extent.y &&
           std::abs(p.z - center.z) <= half_extent.z;
  }
};

}  // namespace loomcast
