#pragma once

#include <array>
#include <cstddef>

#include "diffplan/geometry.hpp"

namespace diffplan::traj {

inline constexpr std::size_t kHorizon = 8;
inline constexpr double kStepSeconds = 0.5;
inline constexpr double kHorizonSeconds = kHorizon * kStepSeconds;
/// Sanity bound on ego-centric coordinates for desk-scale scenes.
inline constexpr double kCoordinateBound = 200.0;

/// Ego-centric position; x is longitudinal, y lateral (left positive).
using Waypoint = Vec2;

/// Future waypoints s_1..s_8 at 0.5 s spacing. The ego sits at the origin at t=0.
struct Trajectory {
  std::array<Waypoint, kHorizon> waypoints{};
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// First-difference representation: actions[0] = s_1, actions[k] = s_{k+1} - s_k.
struct ActionSequence {
  std::array<Vec2, kHorizon> actions{};
  friend bool operator==(const ActionSequence&, const ActionSequence&) = default;
};

bool is_valid(const Trajectory& t);
bool is_valid(const ActionSequence& a);

ActionSequence to_actions(const Trajectory& traj);
Trajectory to_trajectory(const ActionSequence& actions);

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

/// Positions at t = 0, 0.5, ..., 4.0 s (origin prepended).
std::array<Vec2, kHorizon + 1> knots(const Trajectory& traj);

/// Heading at each knot from the direction of motion. Segments shorter than
/// `min_step` keep the previous heading; the ego starts facing +x.
std::array<double, kHorizon + 1> knot_headings(const Trajectory& traj, double min_step = 0.05);

/// Linearly interpolated pose at time t in [0, 4] s.
Pose pose_at(const Trajectory& traj, double t);
/// Piecewise-constant velocity on the segment containing t.
Vec2 velocity_at(const Trajectory& traj, double t);

/// Finite-difference motion extrema over the horizon (origin prepended).
struct MotionExtrema {
  double max_accel = 0.0;     // |second difference| / dt^2
  double max_jerk = 0.0;      // |third difference| / dt^3
  double max_yaw_rate = 0.0;  // |heading difference| / dt
  double max_step = 0.0;      // largest per-step displacement
  double max_curvature = 0.0; // turning angle over mean segment length
};

MotionExtrema motion_extrema(const Trajectory& traj);

/// Arc length travelled along the waypoints (origin prepended).
double path_length(const Trajectory& traj);

}  // namespace diffplan::traj
