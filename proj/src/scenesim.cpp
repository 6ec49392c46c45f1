#include "diffplan/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "diffplan/error.hpp"
#include "diffplan/rng.hpp"

namespace diffplan::sim {

using traj::kHorizon;
using traj::kStepSeconds;

std::string_view to_string(SceneKind k) {
  switch (k) {
    case SceneKind::kStraight: return "straight";
    case SceneKind::kCurve: return "curve";
    case SceneKind::kLaneChange: return "lane_change";
    case SceneKind::kIntersection: return "intersection";
  }
  return "straight";
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::kFollow: return "follow";
    case Command::kLeft: return "left";
    case Command::kRight: return "right";
  }
  return "follow";
}

std::optional<SceneKind> parse_scene_kind(std::string_view s) {
  for (auto k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<Command> parse_command(std::string_view s) {
  for (auto c : {Command::kFollow, Command::kLeft, Command::kRight}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

OrientedRect Obstacle::at(double t) const {
  return {center + t * velocity, heading, half_extent.x, half_extent.y};
}

namespace {

constexpr double kCenterlineLength = 110.0;
constexpr double kIntegrationStep = 0.1;

// Integrates a curvature profile kappa(s) from the origin with heading +x and
// samples a vertex every metre.
Polyline integrate_centerline(const std::function<double(double)>& kappa) {
  std::vector<Vec2> pts{{0.0, 0.0}};
  Vec2 p{};
  double heading = 0.0;
  const int substeps = static_cast<int>(std::lround(1.0 / kIntegrationStep));
  for (int metre = 0; metre < static_cast<int>(kCenterlineLength); ++metre) {
    for (int k = 0; k < substeps; ++k) {
      const double s = metre + (k + 0.5) * kIntegrationStep;
      const double mid = heading + 0.5 * kappa(s) * kIntegrationStep;
      p += kIntegrationStep * unit_from_angle(mid);
      heading += kappa(s) * kIntegrationStep;
    }
    pts.push_back(p);
  }
  return Polyline(std::move(pts));
}

// Smooth 0 -> 1 ramp over [a, a + len].
double ramp(double s, double a, double len) {
  if (s <= a) return 0.0;
  if (s >= a + len) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * (s - a) / len);
}

double tangent_heading(const Polyline& line, double s) {
  const Vec2 t = line.tangent_at(s);
  return std::atan2(t.y, t.x);
}

double lateral_radius(const Obstacle& o, Vec2 axis) {
  const Vec2 u = unit_from_angle(o.heading);
  const Vec2 v{-u.y, u.x};
  return o.half_extent.x * std::abs(dot(u, axis)) + o.half_extent.y * std::abs(dot(v, axis));
}

// Turning angle per metre at each polyline vertex.
std::vector<double> vertex_curvature(const Polyline& line) {
  const auto pts = line.points();
  std::vector<double> k(pts.size(), 0.0);
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i] - pts[i - 1];
    const Vec2 b = pts[i + 1] - pts[i];
    const double angle = std::atan2(cross(a, b), dot(a, b));
    k[i] = angle / (0.5 * (norm(a) + norm(b)));
  }
  return k;
}

}  // namespace

SceneSpec generate_scene(std::uint64_t seed, SceneKind kind) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(kind), 0x5ce7e}));
  SceneSpec scene;
  scene.seed = seed;
  scene.kind = kind;
  scene.corridor_half_width = rng.uniform(2.2, 4.5);
  scene.speed_limit = rng.uniform(5.0, 15.0);

  const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
  switch (kind) {
    case SceneKind::kStraight:
      scene.centerline = integrate_centerline([](double) { return 0.0; });
      break;
    case SceneKind::kCurve: {
      const double start = rng.uniform(0.0, 15.0);
      const double k = side * rng.uniform(0.01, 0.04);
      scene.centerline = integrate_centerline([=](double s) { return k * ramp(s, start, 10.0); });
      break;
    }
    case SceneKind::kLaneChange: {
      const double start = rng.uniform(5.0, 20.0);
      const double len = rng.uniform(28.0, 40.0);
      const double offset = side * rng.uniform(3.0, 4.0);
      const double k = 2.0 * std::numbers::pi * offset / (len * len);
      scene.centerline = integrate_centerline([=](double s) {
        if (s < start || s > start + len) return 0.0;
        return k * std::sin(2.0 * std::numbers::pi * (s - start) / len);
      });
      break;
    }
    case SceneKind::kIntersection: {
      const double start = rng.uniform(8.0, 20.0);
      const double radius = rng.uniform(10.0, 15.0);
      const double k = side / radius;
      constexpr double kRamp = 4.0;
      // Two half-ramps contribute kRamp * |k| of heading; the arc supplies the rest of pi/2.
      const double arc = (0.5 * std::numbers::pi - kRamp * std::abs(k)) / std::abs(k);
      scene.centerline = integrate_centerline([=](double s) {
        const double up = ramp(s, start, kRamp);
        const double down = ramp(s, start + kRamp + arc, kRamp);
        return k * (up - down);
      });
      break;
    }
  }

  const OrientedRect keep_clear{{0.0, 0.0}, 0.0, kEgoHalfLength + 1.5, kEgoHalfWidth + 1.0};

  // Parked vehicles beside the corridor.
  const auto parked = rng.below(5);
  for (std::uint64_t i = 0; i < parked; ++i) {
    const double s = rng.uniform(5.0, 70.0);
    const double sgn = rng.bernoulli(0.5) ? 1.0 : -1.0;
    Obstacle o;
    o.half_extent = {rng.uniform(2.0, 2.6), rng.uniform(0.85, 1.0)};
    o.heading = tangent_heading(scene.centerline, s);
    const Vec2 t = scene.centerline.tangent_at(s);
    const Vec2 n{-t.y, t.x};
    const double lateral = scene.corridor_half_width + o.half_extent.y + rng.uniform(0.2, 2.0);
    o.center = scene.centerline.point_at(s) + (sgn * lateral) * n;
    if (!overlaps(o.at(0.0), keep_clear)) scene.obstacles.push_back(o);
  }

  // Lead vehicle in the corridor, sometimes stopped.
  if (rng.bernoulli(0.5)) {
    const double s = rng.uniform(12.0, 45.0);
    Obstacle o;
    o.half_extent = {rng.uniform(2.0, 2.6), rng.uniform(0.85, 1.0)};
    o.heading = tangent_heading(scene.centerline, s);
    const Vec2 t = scene.centerline.tangent_at(s);
    const Vec2 n{-t.y, t.x};
    o.center = scene.centerline.point_at(s) + rng.uniform(-0.3, 0.3) * n;
    const double speed = rng.bernoulli(0.35) ? 0.0 : rng.uniform(0.3, 0.8) * scene.speed_limit;
    o.velocity = speed * t;
    if (!overlaps(o.at(0.0), keep_clear)) scene.obstacles.push_back(o);
  }
  return scene;
}

Command route_command(const SceneSpec& scene) {
  const Vec2 p = scene.centerline.point_at(40.0);
  if (p.y > 2.5) return Command::kLeft;
  if (p.y < -2.5) return Command::kRight;
  return Command::kFollow;
}

bool point_in_drivable(const SceneSpec& scene, Vec2 p) {
  return scene.centerline.project(p).distance <= scene.corridor_half_width;
}

OrientedRect ego_footprint(const traj::Pose& pose) {
  return {pose.position, pose.heading, kEgoHalfLength, kEgoHalfWidth};
}

bool collision_at(const SceneSpec& scene, const traj::Pose& pose, double t) {
  const OrientedRect ego = ego_footprint(pose);
  return std::any_of(scene.obstacles.begin(), scene.obstacles.end(),
                     [&](const Obstacle& o) { return overlaps(ego, o.at(t)); });
}

std::optional<double> min_time_to_overlap(const SceneSpec& scene, const traj::Trajectory& traj,
                                          double lookahead) {
  if (scene.obstacles.empty()) return std::nullopt;
  constexpr double kResolution = 0.1;
  const int samples = static_cast<int>(std::lround(traj::kHorizonSeconds / kResolution));
  const int ahead = static_cast<int>(std::ceil(lookahead / kResolution - 1e-9));
  std::optional<double> best;
  for (int i = 0; i <= samples; ++i) {
    const double t = i * kResolution;
    const traj::Pose pose = traj::pose_at(traj, t);
    const Vec2 v = traj::velocity_at(traj, t);
    for (int j = 0; j < ahead; ++j) {
      const double h = j * kResolution;
      if (best && h >= *best) break;
      const traj::Pose moved{pose.position + h * v, pose.heading};
      if (collision_at(scene, moved, t + h)) {
        best = h;
        break;
      }
    }
  }
  return best;
}

namespace {

bool footprint_drivable(const SceneSpec& scene, const traj::Pose& pose) {
  const OrientedRect r = ego_footprint(pose);
  const auto c = r.corners();
  for (std::size_t i = 0; i < 4; ++i) {
    if (!point_in_drivable(scene, c[i])) return false;
    if (!point_in_drivable(scene, 0.5 * (c[i] + c[(i + 1) % 4]))) return false;
  }
  return true;
}

}  // namespace

bool expert_label_ok(const SceneSpec& scene, const traj::Trajectory& traj) {
  if (!traj::is_valid(traj)) return false;
  const auto m = traj::motion_extrema(traj);
  // Small margin under the scorer's bounds.
  if (m.max_accel > 0.95 * kComfortAccel || m.max_jerk > 0.95 * kComfortJerk ||
      m.max_yaw_rate > 0.95 * kComfortYawRate) {
    return false;
  }
  for (int i = 0; i <= 40; ++i) {
    const double t = 0.1 * i;
    const traj::Pose pose = traj::pose_at(traj, t);
    if (!footprint_drivable(scene, pose)) return false;
    if (collision_at(scene, pose, t)) return false;
  }
  return !min_time_to_overlap(scene, traj, 1.2).has_value();
}

traj::Trajectory expert_trajectory(const SceneSpec& scene, const EgoStatus& ego) {
  constexpr double kDt = 0.05;
  constexpr double kAccelMax = 1.5;
  constexpr double kDecelMax = 2.6;
  constexpr double kJerkMax = 3.5;
  constexpr double kLateralAccel = 1.8;
  constexpr double kYawRate = 0.45;
  constexpr double kPlanDecel = 1.0;
  constexpr double kHeadway = 1.2;
  constexpr double kStandstillGap = 2.5;

  const auto curvature = vertex_curvature(scene.centerline);
  const auto pts = scene.centerline.points();

  Vec2 pos{};
  double heading = 0.0;
  double v = std::max(0.0, ego.velocity);
  double a = std::clamp(ego.acceleration, -kDecelMax, kAccelMax);

  traj::Trajectory out;
  const int steps_per_waypoint = static_cast<int>(std::lround(kStepSeconds / kDt));
  const int total = steps_per_waypoint * static_cast<int>(kHorizon);

  for (int step = 0; step < total; ++step) {
    const double t = step * kDt;
    const double s = scene.centerline.project(pos).arc_length;

    // Curvature-limited target speed with planned braking ahead of bends.
    double v_target = scene.speed_limit;
    const double horizon = std::max(3.0 * v, 10.0) + 5.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double si = static_cast<double>(i);  // one-metre vertex spacing
      if (si < s - 1.0 || si > s + horizon) continue;
      const double k = std::abs(curvature[i]);
      if (k < 1e-6) continue;
      const double v_bend = std::min(std::sqrt(kLateralAccel / k), kYawRate / k);
      const double dist = std::max(0.0, si - s);
      v_target = std::min(v_target, std::sqrt(v_bend * v_bend + 2.0 * kPlanDecel * dist));
    }

    double a_des = std::clamp(0.8 * (v_target - v), -kDecelMax, kAccelMax);

    // Intelligent-driver interaction with the closest blocking obstacle.
    const Vec2 tangent = scene.centerline.tangent_at(s);
    const Vec2 normal{-tangent.y, tangent.x};
    for (const Obstacle& o : scene.obstacles) {
      const OrientedRect r = o.at(t);
      const auto proj = scene.centerline.project(r.center);
      const double lat_extent = lateral_radius(o, normal);
      if (std::abs(proj.signed_offset) > kEgoHalfWidth + lat_extent + 0.6) continue;
      const double lon_extent = lateral_radius(o, tangent);
      const double gap = proj.arc_length - s - kEgoHalfLength - lon_extent;
      if (proj.arc_length <= s) continue;
      const double v_obs = dot(o.velocity, tangent);
      const double s_star = kStandstillGap + v * kHeadway + v * (v - v_obs) / (2.0 * std::sqrt(kAccelMax * kDecelMax));
      const double ratio = std::max(s_star, 0.0) / std::max(gap, 0.05);
      a_des = std::min(a_des, kAccelMax * (1.0 - ratio * ratio));
    }
    // Fade braking out near standstill so the stop is smooth.
    a_des = std::max(a_des, -std::max(v / 0.8, 0.0));
    a_des = std::clamp(a_des, -kDecelMax, kAccelMax);

    a += std::clamp(a_des - a, -kJerkMax * kDt, kJerkMax * kDt);
    if (v <= 0.0 && a < 0.0) a = 0.0;

    // Pure pursuit on the centerline.
    const double lookahead = std::max(4.0, 1.0 * v);
    const Vec2 target = scene.centerline.point_at(s + lookahead);
    const Vec2 to_target = target - pos;
    const double alpha = std::remainder(std::atan2(to_target.y, to_target.x) - heading, 2.0 * std::numbers::pi);
    const double kappa_cmd = 2.0 * std::sin(alpha) / std::max(norm(to_target), 1e-6);

    const double v_next = std::max(0.0, v + a * kDt);
    const double v_mid = 0.5 * (v + v_next);
    heading += v_mid * kappa_cmd * kDt;
    pos += (v_mid * kDt) * unit_from_angle(heading - 0.5 * v_mid * kappa_cmd * kDt);
    v = v_next;

    if ((step + 1) % steps_per_waypoint == 0) {
      out.waypoints[static_cast<std::size_t>((step + 1) / steps_per_waypoint - 1)] = pos;
    }
  }

  if (!expert_label_ok(scene, out)) {
    throw InfeasibleScene("no comfortable collision-free expert for scene seed " + std::to_string(scene.seed));
  }
  return out;
}

std::array<Vec2, kHistoryLength> backward_history(const EgoStatus& ego) {
  std::array<Vec2, kHistoryLength> h{};
  const double v0 = ego.velocity;
  const double a0 = ego.acceleration;
  for (std::size_t k = 0; k < kHistoryLength; ++k) {
    // Oldest first: tau = 2.0, 1.5, 1.0, 0.5 seconds ago.
    const double tau = kStepSeconds * static_cast<double>(kHistoryLength - k);
    // Speed tau seconds ago is v0 - a0 * tau; clamp at standstill.
    double travelled;
    if (a0 > 0.0 && v0 - a0 * tau < 0.0) {
      const double stop = v0 / a0;
      travelled = v0 * stop - 0.5 * a0 * stop * stop;
    } else {
      travelled = v0 * tau - 0.5 * a0 * tau * tau;
    }
    h[k] = {-travelled, 0.0};
  }
  return h;
}

EpisodeRecord make_episode(std::uint64_t seed, std::uint64_t index, const KindMix& mix) {
  Rng pick(derive_seed(seed, {index, 0xd47a}));
  const double total = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  double u = pick.uniform() * total;
  SceneKind kind = kAllKinds.back();
  for (std::size_t i = 0; i < kAllKinds.size(); ++i) {
    if (u < mix.weights[i]) {
      kind = kAllKinds[i];
      break;
    }
    u -= mix.weights[i];
  }

  for (std::uint64_t attempt = 0; attempt < 256; ++attempt) {
    const std::uint64_t scene_seed = derive_seed(seed, {index, attempt, 0x5eed});
    SceneSpec scene = generate_scene(scene_seed, kind);
    Rng ego_rng(derive_seed(scene_seed, {0xe90}));
    EgoStatus ego;
    ego.velocity = ego_rng.uniform(0.0, 1.0) * scene.speed_limit;
    ego.acceleration = ego_rng.uniform(-0.8, 0.8);
    if (ego.velocity < 1.0) ego.acceleration = std::abs(ego.acceleration);
    ego.command = route_command(scene);
    try {
      traj::Trajectory expert = expert_trajectory(scene, ego);
      EpisodeRecord rec{std::move(scene), ego, backward_history(ego), expert};
      return rec;
    } catch (const InfeasibleScene&) {
      continue;
    }
  }
  throw InfeasibleScene("could not build a feasible episode for index " + std::to_string(index));
}

std::vector<EpisodeRecord> make_dataset(std::size_t n, std::uint64_t seed, const KindMix& mix) {
  std::vector<EpisodeRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_episode(seed, i, mix));
  return out;
}

}  // namespace diffplan::sim
