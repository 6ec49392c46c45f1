#include "diffplan/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace diffplan {

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 u = unit_from_angle(heading);
  const Vec2 v{-u.y, u.x};
  const Vec2 a = half_length * u;
  const Vec2 b = half_width * v;
  return {center + a + b, center - a + b, center - a - b, center + a - b};
}

bool OrientedRect::contains(Vec2 p) const {
  const Vec2 u = unit_from_angle(heading);
  const Vec2 d = p - center;
  return std::abs(dot(d, u)) <= half_length && std::abs(cross(u, d)) <= half_width;
}

namespace {

// Projected half-extent of a rectangle onto a unit axis.
double radius_on_axis(const OrientedRect& r, Vec2 axis) {
  const Vec2 u = unit_from_angle(r.heading);
  const Vec2 v{-u.y, u.x};
  return r.half_length * std::abs(dot(u, axis)) + r.half_width * std::abs(dot(v, axis));
}

}  // namespace

bool overlaps(const OrientedRect& a, const OrientedRect& b) {
  const Vec2 ua = unit_from_angle(a.heading);
  const Vec2 ub = unit_from_angle(b.heading);
  const std::array<Vec2, 4> axes{ua, Vec2{-ua.y, ua.x}, ub, Vec2{-ub.y, ub.x}};
  const Vec2 d = b.center - a.center;
  for (const Vec2& axis : axes) {
    if (std::abs(dot(d, axis)) > radius_on_axis(a, axis) + radius_on_axis(b, axis)) return false;
  }
  return true;
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("polyline needs at least two points");
  cumulative_.resize(points_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    cumulative_[i] = cumulative_[i - 1] + norm(points_[i] - points_[i - 1]);
  }
}

PolylineProjection Polyline::project(Vec2 p) const {
  PolylineProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();

  // Backward ray from the first vertex.
  {
    const Vec2 dir = points_[1] - points_[0];
    const Vec2 t = (1.0 / norm(dir)) * dir;
    const double along = std::min(0.0, dot(p - points_[0], t));
    const Vec2 q = points_[0] + along * t;
    const Vec2 e = p - q;
    best_d2 = dot(e, e);
    best.arc_length = along;
    best.signed_offset = cross(t, e) >= 0.0 ? std::sqrt(best_d2) : -std::sqrt(best_d2);
  }

  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2 a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0) continue;
    const double u = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    const Vec2 e = p - (a + u * ab);
    const double d2 = dot(e, e);
    if (d2 < best_d2) {
      best_d2 = d2;
      best.arc_length = cumulative_[i] + u * std::sqrt(len2);
      best.signed_offset = cross(ab, e) >= 0.0 ? std::sqrt(d2) : -std::sqrt(d2);
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

namespace {

std::size_t segment_index(std::span<const double> cumulative, double s) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  const auto idx = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
  return std::clamp<std::size_t>(idx, 1, cumulative.size() - 1) - 1;
}

}  // namespace

Vec2 Polyline::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_index(cumulative_, s);
  const double seg = cumulative_[i + 1] - cumulative_[i];
  const double u = seg > 0.0 ? (s - cumulative_[i]) / seg : 0.0;
  return points_[i] + u * (points_[i + 1] - points_[i]);
}

Vec2 Polyline::tangent_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_index(cumulative_, s);
  const Vec2 d = points_[i + 1] - points_[i];
  return (1.0 / norm(d)) * d;
}

}  // namespace diffplan
