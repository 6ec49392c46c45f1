#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "diffplan/geometry.hpp"
#include "diffplan/trajspace.hpp"

namespace diffplan::sim {

// Ego footprint: compact car, 4.0 m x 1.8 m.
inline constexpr double kEgoHalfLength = 2.0;
inline constexpr double kEgoHalfWidth = 0.9;

// Comfort bounds shared by the expert controller and the scorer.
inline constexpr double kComfortAccel = 3.0;    // m/s^2
inline constexpr double kComfortJerk = 5.0;     // m/s^3
inline constexpr double kComfortYawRate = 0.6;  // rad/s
inline constexpr double kTtcThreshold = 0.95;   // s

inline constexpr std::size_t kHistoryLength = 4;

enum class SceneKind : std::uint8_t { kStraight = 0, kCurve = 1, kLaneChange = 2, kIntersection = 3 };
inline constexpr std::array<SceneKind, 4> kAllKinds{SceneKind::kStraight, SceneKind::kCurve,
                                                    SceneKind::kLaneChange, SceneKind::kIntersection};

enum class Command : std::uint8_t { kFollow = 0, kLeft = 1, kRight = 2 };

std::string_view to_string(SceneKind k);
std::string_view to_string(Command c);
std::optional<SceneKind> parse_scene_kind(std::string_view s);
std::optional<Command> parse_command(std::string_view s);

struct Obstacle {
  Vec2 center;
  double heading = 0.0;
  Vec2 half_extent;  // (length / 2, width / 2)
  Vec2 velocity;     // constant-velocity forecast

  /// Footprint advanced by t seconds.
  OrientedRect at(double t) const;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  SceneKind kind = SceneKind::kStraight;
  Polyline centerline;
  double corridor_half_width = 3.0;
  double speed_limit = 10.0;
  std::vector<Obstacle> obstacles;
};

struct EgoStatus {
  double velocity = 0.0;
  double acceleration = 0.0;
  Command command = Command::kFollow;
};

struct EpisodeRecord {
  SceneSpec scene;
  EgoStatus ego;
  std::array<Vec2, kHistoryLength> history{};  // t = -2.0, -1.5, -1.0, -0.5 s
  traj::Trajectory expert;
};

/// Deterministic in (seed, kind).
SceneSpec generate_scene(std::uint64_t seed, SceneKind kind);

/// Route command implied by the centerline: where the route heads 40 m out.
Command route_command(const SceneSpec& scene);

/// Reference driver: pure-pursuit lateral control along the centerline with a
/// jerk-limited speed profile that slows for curvature and for blocking
/// obstacles. Throws InfeasibleScene when the result is not collision-free,
/// leaves the corridor, or breaks the comfort bounds.
traj::Trajectory expert_trajectory(const SceneSpec& scene, const EgoStatus& ego);

/// Past positions consistent with the ego status, integrated backwards along -x.
std::array<Vec2, kHistoryLength> backward_history(const EgoStatus& ego);

/// Closed corridor membership: distance to the centerline <= half width.
bool point_in_drivable(const SceneSpec& scene, Vec2 p);

OrientedRect ego_footprint(const traj::Pose& pose);

/// Ego rectangle at `pose` against every obstacle advanced by t.
bool collision_at(const SceneSpec& scene, const traj::Pose& pose, double t);

/// Earliest time-to-overlap when the ego is extrapolated at constant velocity
/// from each 0.1 s sample of the trajectory; nullopt if no overlap occurs
/// within `lookahead` seconds.
std::optional<double> min_time_to_overlap(const SceneSpec& scene, const traj::Trajectory& traj,
                                          double lookahead = 1.0);

/// All checks the expert label must pass. Used by the generator.
bool expert_label_ok(const SceneSpec& scene, const traj::Trajectory& traj);

struct KindMix {
  std::array<double, 4> weights{1.0, 1.0, 1.0, 1.0};
};

/// Deterministic; infeasible scenes are regenerated with derived seeds.
std::vector<EpisodeRecord> make_dataset(std::size_t n, std::uint64_t seed, const KindMix& mix = {});

/// Builds one episode for the given record index.
EpisodeRecord make_episode(std::uint64_t seed, std::uint64_t index, const KindMix& mix = {});

}  // namespace diffplan::sim
