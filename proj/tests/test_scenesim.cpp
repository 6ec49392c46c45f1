#include <doctest.h>

#include <array>
#include <cmath>

#include "diffplan/error.hpp"
#include "diffplan/rng.hpp"
#include "diffplan/scenesim.hpp"

using namespace diffplan;
using namespace diffplan::sim;

namespace {

// Dense sampling: does any point of a lie inside b or vice versa?
bool overlap_by_sampling(const OrientedRect& a, const OrientedRect& b) {
  auto sample = [](const OrientedRect& r, const OrientedRect& other) {
    const Vec2 ax = unit_from_angle(r.heading);
    const Vec2 ay{-ax.y, ax.x};
    constexpr int n = 100;  // 10^4 points per rectangle
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double u = -1.0 + 2.0 * i / (n - 1);
        const double v = -1.0 + 2.0 * j / (n - 1);
        if (other.contains(r.center + (u * r.half_length) * ax + (v * r.half_width) * ay)) return true;
      }
    }
    return false;
  };
  return sample(a, b) || sample(b, a);
}

SceneSpec empty_straight() {
  SceneSpec s;
  s.centerline = Polyline({{0.0, 0.0}, {110.0, 0.0}});
  return s;
}

double max_turning_curvature(const Polyline& line) {
  const auto pts = line.points();
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i] - pts[i - 1];
    const Vec2 b = pts[i + 1] - pts[i];
    const double angle = std::abs(std::atan2(cross(a, b), dot(a, b)));
    worst = std::max(worst, angle / (0.5 * (norm(a) + norm(b))));
  }
  return worst;
}

}  // namespace

TEST_SUITE("scenesim") {
  TEST_CASE("separating axis test matches point sampling") {
    Rng rng(5);
    int hits = 0;
    for (int n = 0; n < 100; ++n) {
      auto rect = [&] {
        return OrientedRect{{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)}, rng.uniform(-M_PI, M_PI),
                            rng.uniform(0.3, 3.0), rng.uniform(0.3, 2.0)};
      };
      const OrientedRect a = rect(), b = rect();
      const bool sat = overlaps(a, b);
      hits += sat;
      CAPTURE(n);
      CHECK(sat == overlap_by_sampling(a, b));
    }
    // both outcomes must be exercised
    CHECK(hits > 10);
    CHECK(hits < 90);
  }

  TEST_CASE("straight scene lies on the x axis") {
    const SceneSpec s = generate_scene(0, SceneKind::kStraight);
    for (Vec2 p : s.centerline.points()) CHECK(p.y == 0.0);
    CHECK(s.centerline.points().back().x > s.centerline.points().front().x);
  }

  TEST_CASE("scene generation is deterministic") {
    for (SceneKind k : kAllKinds) {
      const SceneSpec a = generate_scene(42, k), b = generate_scene(42, k);
      REQUIRE(a.centerline.points().size() == b.centerline.points().size());
      for (std::size_t i = 0; i < a.centerline.points().size(); ++i) CHECK(a.centerline.points()[i] == b.centerline.points()[i]);
      REQUIRE(a.obstacles.size() == b.obstacles.size());
      for (std::size_t i = 0; i < a.obstacles.size(); ++i) {
        CHECK(a.obstacles[i].center == b.obstacles[i].center);
        CHECK(a.obstacles[i].velocity == b.obstacles[i].velocity);
      }
      CHECK(a.speed_limit == b.speed_limit);
    }
  }

  TEST_CASE("curves have monotone arc length and bounded curvature") {
    for (std::uint64_t seed = 1; seed < 30; ++seed) {
      const SceneSpec s = generate_scene(seed, SceneKind::kCurve);
      const auto pts = s.centerline.points();
      double prev = -1.0;
      for (std::size_t i = 0; i < pts.size(); i += 5) {
        const double arc = s.centerline.project(pts[i]).arc_length;
        CHECK(arc > prev);
        prev = arc;
      }
      CAPTURE(seed);
      CHECK(max_turning_curvature(s.centerline) <= 0.2 + 1e-9);
    }
  }

  TEST_CASE("expert holds the speed limit on an empty straight road") {
    const SceneSpec s = empty_straight();
    const traj::Trajectory t = expert_trajectory(s, {10.0, 0.0, Command::kFollow});
    for (std::size_t k = 0; k < traj::kHorizon; ++k) {
      CHECK(t.waypoints[k].x == doctest::Approx(5.0 * (k + 1)).epsilon(1e-6));
      CHECK(std::abs(t.waypoints[k].y) < 1e-6);
    }
  }

  TEST_CASE("expert stays short of a wall across the corridor") {
    auto wall_scene = [](double x) {
      SceneSpec s = empty_straight();
      s.obstacles.push_back({{x, 0.0}, 0.0, {0.25, 4.0}, {0.0, 0.0}});
      return s;
    };
    {
      const traj::Trajectory t = expert_trajectory(wall_scene(3.0), {0.0, 0.0, Command::kFollow});
      CHECK(t.waypoints.back().x + kEgoHalfLength < 3.0 - 0.25);
    }
    {
      const traj::Trajectory t = expert_trajectory(wall_scene(18.0), {6.0, 0.0, Command::kFollow});
      CHECK(t.waypoints.back().x + kEgoHalfLength < 18.0 - 0.25);
      // it slowed down: the last step is shorter than the first
      CHECK(t.waypoints[7].x - t.waypoints[6].x < t.waypoints[0].x);
    }
  }

  TEST_CASE("expert from standstill accelerates within comfort bounds") {
    const traj::Trajectory t = expert_trajectory(empty_straight(), {0.0, 0.0, Command::kFollow});
    double prev = 0.0;
    for (const auto& w : t.waypoints) {
      CHECK(w.x > prev);
      prev = w.x;
    }
    const auto e = traj::motion_extrema(t);
    CHECK(e.max_accel <= kComfortAccel);
    CHECK(e.max_jerk <= kComfortJerk);
    CHECK(e.max_yaw_rate <= kComfortYawRate);
  }

  TEST_CASE("drivable area is a closed corridor") {
    const SceneSpec s = empty_straight();
    CHECK(point_in_drivable(s, {0.0, 0.0}));
    CHECK_FALSE(point_in_drivable(s, {20.0, s.corridor_half_width + 1.0}));
    CHECK(point_in_drivable(s, {20.0, s.corridor_half_width}));
    CHECK(point_in_drivable(s, {20.0, -s.corridor_half_width}));
  }

  TEST_CASE("collision queries") {
    SceneSpec s = empty_straight();
    Rng rng(3);
    for (int n = 0; n < 20; ++n) {
      const traj::Pose p{{rng.uniform(-10.0, 10.0), rng.uniform(-3.0, 3.0)}, rng.uniform(-1.0, 1.0)};
      CHECK_FALSE(collision_at(s, p, rng.uniform(0.0, 4.0)));
    }
    s.obstacles.push_back({{10.0, 0.0}, 0.0, {2.0, 0.9}, {-5.0, 0.0}});
    CHECK(collision_at(s, {{0.0, 0.0}, 0.0}, 2.0));
    CHECK_FALSE(collision_at(s, {{0.0, 0.0}, 0.0}, 0.0));
    CHECK(collision_at(s, {{10.0, 0.0}, 0.3}, 0.0));
  }

  TEST_CASE("time to overlap extrapolates each sample at its segment velocity") {
    SceneSpec s = empty_straight();
    // static obstacle whose rear face sits 2.5 m ahead of the front bumper
    s.obstacles.push_back({{2.0 + 2.5 + 2.0, 0.0}, 0.0, {2.0, 0.9}, {0.0, 0.0}});
    // 4 m/s for half a second, then stopped 0.5 m short of the obstacle
    traj::Trajectory t;
    for (auto& w : t.waypoints) w = {2.0, 0.0};
    // closest sample is t = 0.4 s: 0.9 m gap at 4 m/s, 0.225 s, found on the 0.1 s grid
    const auto ttc = min_time_to_overlap(s, t);
    REQUIRE(ttc.has_value());
    CHECK(*ttc == doctest::Approx(std::ceil(0.225 / 0.1) * 0.1));
    CHECK_FALSE(min_time_to_overlap(s, traj::Trajectory{}).has_value());
  }

  TEST_CASE("dataset records are deterministic") {
    const auto a = make_dataset(1, 7), b = make_dataset(1, 7);
    CHECK(a[0].expert == b[0].expert);
    CHECK(a[0].ego.velocity == b[0].ego.velocity);
    CHECK(a[0].history == b[0].history);
    CHECK(a[0].scene.centerline.points().size() == b[0].scene.centerline.points().size());
  }

  TEST_CASE("uniform mix yields balanced kinds and valid experts") {
    const auto data = make_dataset(1000, 0);
    std::array<int, 4> counts{};
    for (const auto& e : data) {
      ++counts[static_cast<int>(e.scene.kind)];
      CHECK(expert_label_ok(e.scene, e.expert));
    }
    for (int c : counts) {
      CHECK(c >= 225);
      CHECK(c <= 275);
    }
  }

  TEST_CASE("history integrates backwards along -x") {
    const auto h = backward_history({4.0, 0.0, Command::kFollow});
    CHECK(h.back().x == doctest::Approx(-2.0));
    CHECK(h.front().x == doctest::Approx(-8.0));
    for (Vec2 p : h) CHECK(p.y == 0.0);
  }
}
