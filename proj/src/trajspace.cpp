#include "diffplan/trajspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace diffplan::traj {

namespace {

bool finite_and_bounded(Vec2 p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::abs(p.x) <= kCoordinateBound &&
         std::abs(p.y) <= kCoordinateBound;
}

double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

}  // namespace

bool is_valid(const Trajectory& t) {
  return std::all_of(t.waypoints.begin(), t.waypoints.end(), finite_and_bounded);
}

bool is_valid(const ActionSequence& a) {
  return std::all_of(a.actions.begin(), a.actions.end(),
                     [](Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); });
}

ActionSequence to_actions(const Trajectory& traj) {
  ActionSequence out;
  out.actions[0] = traj.waypoints[0];
  for (std::size_t k = 1; k < kHorizon; ++k) {
    out.actions[k] = traj.waypoints[k] - traj.waypoints[k - 1];
  }
  return out;
}

Trajectory to_trajectory(const ActionSequence& actions) {
  Trajectory out;
  Vec2 acc{};
  for (std::size_t k = 0; k < kHorizon; ++k) {
    acc += actions.actions[k];
    out.waypoints[k] = acc;
  }
  return out;
}

std::array<Vec2, kHorizon + 1> knots(const Trajectory& traj) {
  std::array<Vec2, kHorizon + 1> k{};
  std::copy(traj.waypoints.begin(), traj.waypoints.end(), k.begin() + 1);
  return k;
}

std::array<double, kHorizon + 1> knot_headings(const Trajectory& traj, double min_step) {
  const auto k = knots(traj);
  std::array<double, kHorizon + 1> h{};
  double previous = 0.0;
  for (std::size_t i = 0; i <= kHorizon; ++i) {
    // Central difference inside, one-sided at the ends.
    const Vec2 a = k[i == 0 ? 0 : i - 1];
    const Vec2 b = k[i == kHorizon ? kHorizon : i + 1];
    const Vec2 d = b - a;
    if (i > 0 && norm(d) >= min_step) previous = std::atan2(d.y, d.x);
    h[i] = previous;
  }
  return h;
}

Pose pose_at(const Trajectory& traj, double t) {
  const auto k = knots(traj);
  const double u = std::clamp(t / kStepSeconds, 0.0, static_cast<double>(kHorizon));
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(u), kHorizon - 1);
  const double frac = u - static_cast<double>(i);
  const Vec2 seg = k[i + 1] - k[i];

  double heading = 0.0;
  // Heading of the most recent segment with meaningful length.
  for (std::size_t j = i + 1; j-- > 0;) {
    const Vec2 d = k[j + 1] - k[j];
    if (norm(d) >= 0.05) {
      heading = std::atan2(d.y, d.x);
      break;
    }
  }
  return {k[i] + frac * seg, heading};
}

Vec2 velocity_at(const Trajectory& traj, double t) {
  const auto k = knots(traj);
  const double u = std::clamp(t / kStepSeconds, 0.0, static_cast<double>(kHorizon));
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(u), kHorizon - 1);
  return (1.0 / kStepSeconds) * (k[i + 1] - k[i]);
}

MotionExtrema motion_extrema(const Trajectory& traj) {
  const auto k = knots(traj);
  constexpr double dt = kStepSeconds;
  MotionExtrema m;

  std::array<Vec2, kHorizon> steps{};
  for (std::size_t i = 0; i < kHorizon; ++i) {
    steps[i] = k[i + 1] - k[i];
    m.max_step = std::max(m.max_step, norm(steps[i]));
  }
  std::array<Vec2, kHorizon - 1> accel{};
  for (std::size_t i = 0; i + 1 < kHorizon; ++i) {
    accel[i] = (1.0 / (dt * dt)) * (steps[i + 1] - steps[i]);
    m.max_accel = std::max(m.max_accel, norm(accel[i]));
  }
  for (std::size_t i = 0; i + 1 < accel.size(); ++i) {
    m.max_jerk = std::max(m.max_jerk, norm((1.0 / dt) * (accel[i + 1] - accel[i])));
  }

  const auto headings = knot_headings(traj);
  for (std::size_t i = 0; i < kHorizon; ++i) {
    m.max_yaw_rate = std::max(m.max_yaw_rate, std::abs(wrap_angle(headings[i + 1] - headings[i])) / dt);
  }

  for (std::size_t i = 0; i + 1 < kHorizon; ++i) {
    const double la = norm(steps[i]);
    const double lb = norm(steps[i + 1]);
    if (la < 0.5 || lb < 0.5) continue;
    const double angle = std::abs(std::atan2(cross(steps[i], steps[i + 1]), dot(steps[i], steps[i + 1])));
    m.max_curvature = std::max(m.max_curvature, angle / (0.5 * (la + lb)));
  }
  return m;
}

double path_length(const Trajectory& traj) {
  const auto k = knots(traj);
  double s = 0.0;
  for (std::size_t i = 0; i < kHorizon; ++i) s += norm(k[i + 1] - k[i]);
  return s;
}

}  // namespace diffplan::traj
