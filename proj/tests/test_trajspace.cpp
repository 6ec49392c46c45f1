#include <doctest.h>

#include <cmath>

#include "diffplan/rng.hpp"
#include "diffplan/trajspace.hpp"

using namespace diffplan;
using namespace diffplan::traj;

namespace {

Trajectory make_traj(std::initializer_list<Vec2> pts) {
  Trajectory t;
  std::size_t i = 0;
  for (Vec2 p : pts) t.waypoints[i++] = p;
  return t;
}

Trajectory random_traj(Rng& rng) {
  Trajectory t;
  for (auto& w : t.waypoints) w = {rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0)};
  return t;
}

}  // namespace

TEST_SUITE("trajspace") {
  TEST_CASE("first differences with a padded tail") {
    Trajectory t = make_traj({{1.0, 0.5}, {2.0, 1.0}, {3.5, 1.0}});
    for (std::size_t i = 3; i < kHorizon; ++i) t.waypoints[i] = {3.5, 1.0};
    const ActionSequence a = to_actions(t);
    CHECK(a.actions[0] == Vec2{1.0, 0.5});
    CHECK(a.actions[1] == Vec2{1.0, 0.5});
    CHECK(a.actions[2] == Vec2{1.5, 0.0});
    for (std::size_t i = 3; i < kHorizon; ++i) CHECK(a.actions[i] == Vec2{0.0, 0.0});
  }

  TEST_CASE("zero trajectory gives zero actions") {
    for (Vec2 v : to_actions(Trajectory{}).actions) CHECK(v == Vec2{0.0, 0.0});
  }

  TEST_CASE("constant velocity gives constant actions") {
    Trajectory t;
    for (std::size_t k = 0; k < kHorizon; ++k) t.waypoints[k] = {(k + 1) * 10.0 * kStepSeconds, 0.0};
    for (Vec2 v : to_actions(t).actions) {
      CHECK(v.x == doctest::Approx(5.0));
      CHECK(v.y == 0.0);
    }
  }

  TEST_CASE("cumulative sum of unit steps") {
    ActionSequence a;
    for (auto& v : a.actions) v = {1.0, 0.0};
    const Trajectory t = to_trajectory(a);
    for (std::size_t k = 0; k < kHorizon; ++k) CHECK(t.waypoints[k] == Vec2{k + 1.0, 0.0});
  }

  TEST_CASE("cancelling actions") {
    ActionSequence a;
    a.actions[0] = {0.5, 0.1};
    a.actions[1] = {-0.5, -0.1};
    const Trajectory t = to_trajectory(a);
    CHECK(t.waypoints[0] == Vec2{0.5, 0.1});
    for (std::size_t k = 1; k < kHorizon; ++k) {
      CHECK(t.waypoints[k].x == doctest::Approx(0.0));
      CHECK(t.waypoints[k].y == doctest::Approx(0.0));
    }
  }

  TEST_CASE("round trip and linearity on random trajectories") {
    Rng rng(11);
    for (int n = 0; n < 200; ++n) {
      const Trajectory a = random_traj(rng);
      const Trajectory b = random_traj(rng);
      const Trajectory back = to_trajectory(to_actions(a));
      for (std::size_t k = 0; k < kHorizon; ++k) {
        CHECK(back.waypoints[k].x == doctest::Approx(a.waypoints[k].x).epsilon(1e-12));
        CHECK(back.waypoints[k].y == doctest::Approx(a.waypoints[k].y).epsilon(1e-12));
      }
      Trajectory sum;
      for (std::size_t k = 0; k < kHorizon; ++k) sum.waypoints[k] = a.waypoints[k] + 2.0 * b.waypoints[k];
      const auto da = to_actions(a), db = to_actions(b), ds = to_actions(sum);
      for (std::size_t k = 0; k < kHorizon; ++k) {
        CHECK(ds.actions[k].x == doctest::Approx(da.actions[k].x + 2.0 * db.actions[k].x));
        CHECK(ds.actions[k].y == doctest::Approx(da.actions[k].y + 2.0 * db.actions[k].y));
      }
    }
  }

  TEST_CASE("validity rejects non-finite and out-of-range values") {
    Trajectory t;
    CHECK(is_valid(t));
    t.waypoints[3].x = std::nan("");
    CHECK_FALSE(is_valid(t));
    t.waypoints[3].x = 2.0 * kCoordinateBound;
    CHECK_FALSE(is_valid(t));
  }

  TEST_CASE("pose interpolation and headings") {
    Trajectory t;
    for (std::size_t k = 0; k < kHorizon; ++k) t.waypoints[k] = {0.0, (k + 1) * 1.0};
    const Pose p = pose_at(t, 0.25);
    CHECK(p.position.y == doctest::Approx(0.5));
    CHECK(p.heading == doctest::Approx(M_PI / 2));
    CHECK(velocity_at(t, 1.2).y == doctest::Approx(2.0));
    CHECK(path_length(t) == doctest::Approx(8.0));
    // stationary trajectory keeps the initial heading
    for (double h : knot_headings(Trajectory{})) CHECK(h == 0.0);
  }

  TEST_CASE("motion extrema of a constant acceleration profile") {
    Trajectory t;
    const double a = 2.0;
    for (std::size_t k = 0; k < kHorizon; ++k) {
      const double s = (k + 1) * kStepSeconds;
      t.waypoints[k] = {0.5 * a * s * s, 0.0};
    }
    const MotionExtrema e = motion_extrema(t);
    CHECK(e.max_accel == doctest::Approx(a));
    CHECK(e.max_jerk == doctest::Approx(0.0));
    CHECK(e.max_yaw_rate == doctest::Approx(0.0));
  }
}
