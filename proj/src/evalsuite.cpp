#include "diffplan/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diffplan/error.hpp"

namespace diffplan::eval {

double pdm_score(const SubScores& s) {
  return s.nc * s.dac * s.ttc * (5.0 * s.ddc + 2.0 * s.comfort + 5.0 * s.ep) / 12.0;
}

Vec2 RasterWindow::cell_center(std::uint32_t index) const {
  const std::uint32_t ix = index / ny;
  const std::uint32_t iy = index % ny;
  return {x_min + (ix + 0.5) * cell, y_min + (iy + 0.5) * cell};
}

namespace {

// Inclusive range of cell indices along one axis whose centres fall in [lo, hi].
bool cell_range(double lo, double hi, double origin, double cell, std::uint32_t n, std::uint32_t& first,
                std::uint32_t& last) {
  const double a = std::ceil((lo - origin) / cell - 0.5);
  const double b = std::floor((hi - origin) / cell - 0.5);
  const double lo_i = std::max(a, 0.0);
  const double hi_i = std::min(b, static_cast<double>(n) - 1.0);
  if (lo_i > hi_i) return false;
  first = static_cast<std::uint32_t>(lo_i);
  last = static_cast<std::uint32_t>(hi_i);
  return true;
}

template <class Fn>
void for_cells_in_box(const RasterWindow& w, Vec2 lo, Vec2 hi, Fn&& fn) {
  std::uint32_t x0, x1, y0, y1;
  if (!cell_range(lo.x, hi.x, w.x_min, w.cell, w.nx, x0, x1)) return;
  if (!cell_range(lo.y, hi.y, w.y_min, w.cell, w.ny, y0, y1)) return;
  for (std::uint32_t ix = x0; ix <= x1; ++ix) {
    for (std::uint32_t iy = y0; iy <= y1; ++iy) fn(ix * w.ny + iy);
  }
}

constexpr double kSweepResolution = 0.1;

}  // namespace

RasterSet sweep(const traj::Trajectory& traj, const RasterWindow& window) {
  RasterSet cells;
  const int samples = static_cast<int>(std::lround(traj::kHorizonSeconds / kSweepResolution));
  for (int i = 0; i <= samples; ++i) {
    const OrientedRect r = sim::ego_footprint(traj::pose_at(traj, i * kSweepResolution));
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi = -1.0 * lo;
    for (Vec2 c : r.corners()) {
      lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
      hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
    }
    for_cells_in_box(window, lo, hi, [&](std::uint32_t idx) {
      if (r.contains(window.cell_center(idx))) cells.push_back(idx);
    });
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

double diversity_of_sets(std::span<const RasterSet> sets) {
  if (sets.empty()) return 0.0;
  RasterSet uni;
  for (const auto& s : sets) {
    RasterSet merged;
    std::set_union(uni.begin(), uni.end(), s.begin(), s.end(), std::back_inserter(merged));
    uni.swap(merged);
  }
  if (uni.empty()) return 0.0;
  // Every R_i is a subset of U, so |R_i & U| / |R_i | U| = |R_i| / |U|.
  double iou = 0.0;
  for (const auto& s : sets) iou += static_cast<double>(s.size()) / static_cast<double>(uni.size());
  return 1.0 - iou / static_cast<double>(sets.size());
}

double diversity(std::span<const traj::Trajectory> cands, const RasterWindow& window) {
  std::vector<RasterSet> sets;
  sets.reserve(cands.size());
  for (const auto& c : cands) sets.push_back(sweep(c, window));
  return diversity_of_sets(sets);
}

DrivableMask::DrivableMask(const sim::SceneSpec& scene, const RasterWindow& window)
    : mask_(static_cast<std::size_t>(window.nx) * window.ny, 0) {
  const auto pts = scene.centerline.points();
  const double hw = scene.corridor_half_width;
  const std::uint32_t total = window.nx * window.ny;

  // Backward ray, evaluated exactly as Polyline::project does.
  const Vec2 dir = pts[1] - pts[0];
  const Vec2 t = (1.0 / norm(dir)) * dir;
  for (std::uint32_t idx = 0; idx < total; ++idx) {
    const Vec2 p = window.cell_center(idx);
    const double along = std::min(0.0, dot(p - pts[0], t));
    const Vec2 e = p - (pts[0] + along * t);
    if (std::sqrt(dot(e, e)) <= hw) mask_[idx] = 1;
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i];
    const Vec2 ab = pts[i + 1] - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0) continue;
    const Vec2 lo{std::min(a.x, pts[i + 1].x) - hw, std::min(a.y, pts[i + 1].y) - hw};
    const Vec2 hi{std::max(a.x, pts[i + 1].x) + hw, std::max(a.y, pts[i + 1].y) + hw};
    for_cells_in_box(window, lo, hi, [&](std::uint32_t idx) {
      if (mask_[idx]) return;
      const Vec2 p = window.cell_center(idx);
      const double u = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
      const Vec2 e = p - (a + u * ab);
      if (std::sqrt(dot(e, e)) <= hw) mask_[idx] = 1;
    });
  }
}

ScoringContext::ScoringContext(const sim::SceneSpec& s, const sim::EgoStatus& e, const traj::Trajectory& reference,
                               const RasterWindow& w)
    : scene(&s), ego(e), reference_progress(centerline_progress(s, reference)), window(w), drivable(s, w) {}

ScoringContext ScoringContext::with_expert(const sim::SceneSpec& scene, const sim::EgoStatus& ego,
                                           const RasterWindow& window) {
  try {
    return ScoringContext(scene, ego, sim::expert_trajectory(scene, ego), window);
  } catch (const InfeasibleScene&) {
    return ScoringContext(scene, ego, traj::Trajectory{}, window);
  }
}

double centerline_progress(const sim::SceneSpec& scene, const traj::Trajectory& traj) {
  return scene.centerline.project(traj.waypoints.back()).arc_length;
}

SubScores sub_scores(const traj::Trajectory& traj, const ScoringContext& ctx) {
  const sim::SceneSpec& scene = *ctx.scene;
  SubScores s;

  for (std::size_t k = 0; k < traj::kHorizon; ++k) {
    const double t = (k + 1) * traj::kStepSeconds;
    if (sim::collision_at(scene, traj::pose_at(traj, t), t)) {
      s.nc = 0.0;
      break;
    }
  }

  for (std::uint32_t idx : sweep(traj, ctx.window)) {
    if (!ctx.drivable.at(idx)) {
      s.dac = 0.0;
      break;
    }
  }
  // Footprint parts outside the raster window are checked pointwise.
  if (s.dac == 1.0) {
    const int samples = static_cast<int>(std::lround(traj::kHorizonSeconds / kSweepResolution));
    for (int i = 0; i <= samples && s.dac == 1.0; ++i) {
      for (Vec2 c : sim::ego_footprint(traj::pose_at(traj, i * kSweepResolution)).corners()) {
        if (!ctx.window.contains(c) && !sim::point_in_drivable(scene, c)) s.dac = 0.0;
      }
    }
  }

  const auto ttc = sim::min_time_to_overlap(scene, traj, 1.0);
  s.ttc = ttc && *ttc < sim::kTtcThreshold ? 0.0 : 1.0;

  const traj::MotionExtrema m = traj::motion_extrema(traj);
  s.comfort = m.max_accel <= sim::kComfortAccel && m.max_jerk <= sim::kComfortJerk &&
                      m.max_yaw_rate <= sim::kComfortYawRate
                  ? 1.0
                  : 0.0;

  constexpr double kMinReference = 0.5;
  if (ctx.reference_progress < kMinReference) {
    s.ep = 1.0;
  } else {
    s.ep = std::clamp(centerline_progress(scene, traj) / ctx.reference_progress, 0.0, 1.0);
  }
  return s;
}

SubScores sub_scores(const traj::Trajectory& traj, const sim::SceneSpec& scene, const sim::EgoStatus& ego) {
  return sub_scores(traj, ScoringContext::with_expert(scene, ego));
}

double violation(const traj::Trajectory& traj, const RasterWindow& window) {
  const traj::MotionExtrema m = traj::motion_extrema(traj);
  double v = std::max(0.0, m.max_step - kMaxStep) + std::max(0.0, m.max_accel - kMaxAccel) +
             std::max(0.0, m.max_curvature - kMaxCurvature);
  for (Vec2 p : traj.waypoints) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::numeric_limits<double>::infinity();
    v += std::max(0.0, window.x_min - p.x) + std::max(0.0, p.x - window.x_max()) +
         std::max(0.0, window.y_min - p.y) + std::max(0.0, p.y - window.y_max());
  }
  return v;
}

FilterResult rejection_filter(std::span<const traj::Trajectory> cands, const RasterWindow& window) {
  if (cands.empty()) throw std::invalid_argument("rejection_filter needs at least one candidate");
  FilterResult r;
  std::size_t best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double v = violation(cands[i], window);
    if (v == 0.0) r.survivors.push_back(i);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  if (r.survivors.empty()) {
    r.survivors.push_back(best);
    r.fallback = true;
  }
  return r;
}

std::size_t select_top1(std::span<const traj::Trajectory> cands, std::span<const std::size_t> survivors,
                        const ScoringContext& ctx) {
  if (survivors.empty()) throw std::invalid_argument("select_top1 needs at least one survivor");
  std::size_t best = survivors[0];
  double best_score = -1.0;
  double best_ep = -1.0;
  for (std::size_t idx : survivors) {
    const SubScores s = sub_scores(cands[idx], ctx);
    const double score = pdm_score(s);
    if (score > best_score || (score == best_score && s.ep > best_ep) ||
        (score == best_score && s.ep == best_ep && idx < best)) {
      best = idx;
      best_score = score;
      best_ep = s.ep;
    }
  }
  return best;
}

}  // namespace diffplan::eval
