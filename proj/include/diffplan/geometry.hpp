#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace diffplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit_from_angle(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Rectangle with arbitrary heading; half_length runs along the heading axis.
struct OrientedRect {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;

  std::array<Vec2, 4> corners() const;
  bool contains(Vec2 p) const;  // closed
};

/// Separating-axis overlap test. Touching rectangles count as overlapping.
bool overlaps(const OrientedRect& a, const OrientedRect& b);

/// Result of projecting a point onto a polyline.
struct PolylineProjection {
  double arc_length = 0.0;  // along the polyline; negative on the backward extension
  double distance = 0.0;    // unsigned distance to the closest point
  double signed_offset = 0.0;  // positive to the left of the direction of travel
};

/// Polyline with cached cumulative arc length. The first vertex is extended
/// backwards by a ray along the initial tangent so that points behind the
/// start still have a lateral distance.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  std::span<const Vec2> points() const { return points_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  PolylineProjection project(Vec2 p) const;
  /// Point and unit tangent at arc length s, clamped to [0, length].
  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;

 private:
  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

}  // namespace diffplan
