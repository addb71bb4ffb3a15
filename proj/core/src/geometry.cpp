#include "percarch/geometry.hpp"

#include <algorithm>
#include <limits>

namespace percarch {

double wrap_angle(double rad) {
  double wrapped = std::remainder(rad, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

Box2 bounding_box(std::span<const Vec2> polygon) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box2 box{{inf, inf}, {-inf, -inf}};
  for (const Vec2& v : polygon) {
    box.min.x = std::min(box.min.x, v.x);
    box.min.y = std::min(box.min.y, v.y);
    box.max.x = std::max(box.max.x, v.x);
    box.max.y = std::max(box.max.y, v.y);
  }
  return box;
}

namespace {

constexpr double kEdgeTolerance = 1e-9;

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  if (std::abs(cross(ab, ap)) > kEdgeTolerance * std::max(1.0, ab.norm())) return false;
  const double t = dot(ap, ab);
  return t >= -kEdgeTolerance && t <= dot(ab, ab) + kEdgeTolerance;
}

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (std::abs(v) <= kEdgeTolerance) return 0;
  return v > 0 ? 1 : -1;
}

}  // namespace

bool point_in_polygon(std::span<const Vec2> polygon, Vec2 p) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    if (on_segment(a, b, p)) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const int o1 = orientation(a0, a1, b0);
  const int o2 = orientation(a0, a1, b1);
  const int o3 = orientation(b0, b1, a0);
  const int o4 = orientation(b0, b1, a1);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a0, a1, b0)) return true;
  if (o2 == 0 && on_segment(a0, a1, b1)) return true;
  if (o3 == 0 && on_segment(b0, b1, a0)) return true;
  if (o4 == 0 && on_segment(b0, b1, a1)) return true;
  return false;
}

bool polygon_is_simple(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a0 = polygon[i];
    const Vec2 a1 = polygon[(i + 1) % n];
    if (a0 == a1) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(a0, a1, polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

std::vector<Vec2> OrientedRect::corners() const {
  const Vec2 along{std::sin(heading), std::cos(heading)};
  const Vec2 across{along.y, -along.x};
  const Vec2 a = along * (0.5 * length);
  const Vec2 c = across * (0.5 * width);
  return {center + a + c, center + a - c, center - a - c, center - a + c};
}

bool OrientedRect::contains(Vec2 p) const {
  const Vec2 along{std::sin(heading), std::cos(heading)};
  const Vec2 across{along.y, -along.x};
  const Vec2 d = p - center;
  return std::abs(dot(d, along)) <= 0.5 * length + kEdgeTolerance &&
         std::abs(dot(d, across)) <= 0.5 * width + kEdgeTolerance;
}

bool segment_intersects_rect(Vec2 a, Vec2 b, const OrientedRect& rect) {
  if (rect.contains(a) || rect.contains(b)) return true;
  const std::vector<Vec2> c = rect.corners();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (segments_intersect(a, b, c[i], c[(i + 1) % c.size()])) return true;
  }
  return false;
}

bool rects_overlap(const OrientedRect& a, const OrientedRect& b) {
  const std::vector<Vec2> ca = a.corners();
  const std::vector<Vec2> cb = b.corners();
  const Vec2 axes[] = {{std::sin(a.heading), std::cos(a.heading)},
                       {std::cos(a.heading), -std::sin(a.heading)},
                       {std::sin(b.heading), std::cos(b.heading)},
                       {std::cos(b.heading), -std::sin(b.heading)}};
  for (Vec2 axis : axes) {
    double amin = dot(ca[0], axis), amax = amin;
    double bmin = dot(cb[0], axis), bmax = bmin;
    for (std::size_t i = 1; i < 4; ++i) {
      amin = std::min(amin, dot(ca[i], axis));
      amax = std::max(amax, dot(ca[i], axis));
      bmin = std::min(bmin, dot(cb[i], axis));
      bmax = std::max(bmax, dot(cb[i], axis));
    }
    if (amax < bmin - 1e-12 || bmax < amin - 1e-12) return false;
  }
  return true;
}

}  // namespace percarch
