#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace percarch {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle in radians to (-pi, pi].
double wrap_angle(double rad);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
  double norm() const { return std::hypot(x, y); }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  constexpr Vec2 xy() const { return {x, y}; }
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Axis-aligned bounding box of a polygon.
struct Box2 {
  Vec2 min;
  Vec2 max;
};

Box2 bounding_box(std::span<const Vec2> polygon);

/// Even-odd point-in-polygon test; points on an edge count as inside.
bool point_in_polygon(std::span<const Vec2> polygon, Vec2 p);

/// True when no two non-adjacent edges intersect and there are >= 3 vertices.
bool polygon_is_simple(std::span<const Vec2> polygon);

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);

/// Rectangle centred at `center`, long axis along `heading` (radians, measured
/// like azimuth: from +y toward +x).
struct OrientedRect {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  std::vector<Vec2> corners() const;
  bool contains(Vec2 p) const;
};

/// Does the segment [a, b] touch the rectangle (edges or interior)?
bool segment_intersects_rect(Vec2 a, Vec2 b, const OrientedRect& rect);

/// Separating-axis overlap test; touching counts as overlap.
bool rects_overlap(const OrientedRect& a, const OrientedRect& b);

}  // namespace percarch
