#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "diffplan/scenesim.hpp"
#include "diffplan/trajspace.hpp"

namespace diffplan::eval {

struct SubScores {
  double nc = 1.0;
  double dac = 1.0;
  double ep = 1.0;
  double ttc = 1.0;
  double comfort = 1.0;
  double ddc = 1.0;  // exempt, always 1
};

/// NC * DAC * TTC * (5 * DDC + 2 * Comfort + 5 * EP) / 12.
double pdm_score(const SubScores& s);

/// 320 x 320 cells of 0.2 m covering x in [-2, 62], y in [-32, 32].
struct RasterWindow {
  double x_min = -2.0;
  double y_min = -32.0;
  double cell = 0.2;
  std::uint32_t nx = 320;
  std::uint32_t ny = 320;

  double x_max() const { return x_min + cell * nx; }
  double y_max() const { return y_min + cell * ny; }
  bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max() && p.y >= y_min && p.y <= y_max(); }
  Vec2 cell_center(std::uint32_t index) const;
};

/// Sorted, unique cell indices (ix * ny + iy).
using RasterSet = std::vector<std::uint32_t>;

/// Cells whose centres lie inside the ego footprint at any 0.1 s pose along
/// the trajectory. Cells outside the window are dropped.
RasterSet sweep(const traj::Trajectory& traj, const RasterWindow& window = {});

/// 1 - mean_i |R_i & U| / |R_i | U| with U the union of all sets.
double diversity_of_sets(std::span<const RasterSet> sets);
double diversity(std::span<const traj::Trajectory> cands, const RasterWindow& window = {});

/// point_in_drivable evaluated at every cell centre of the window, built by
/// rasterising one capsule per centerline segment.
class DrivableMask {
 public:
  DrivableMask(const sim::SceneSpec& scene, const RasterWindow& window);
  bool at(std::uint32_t index) const { return mask_[index] != 0; }

 private:
  std::vector<std::uint8_t> mask_;
};

/// Per-scene state shared by every candidate scored against it.
struct ScoringContext {
  const sim::SceneSpec* scene = nullptr;
  sim::EgoStatus ego;
  double reference_progress = 0.0;  // centerline progress of the expert
  RasterWindow window;
  DrivableMask drivable;

  ScoringContext(const sim::SceneSpec& scene, const sim::EgoStatus& ego, const traj::Trajectory& reference,
                 const RasterWindow& window = {});
  /// Uses the expert controller as the reference; an infeasible scene gives progress 0.
  static ScoringContext with_expert(const sim::SceneSpec& scene, const sim::EgoStatus& ego,
                                    const RasterWindow& window = {});
};

/// Signed arc length of the final waypoint along the centerline.
double centerline_progress(const sim::SceneSpec& scene, const traj::Trajectory& traj);

SubScores sub_scores(const traj::Trajectory& traj, const ScoringContext& ctx);
SubScores sub_scores(const traj::Trajectory& traj, const sim::SceneSpec& scene, const sim::EgoStatus& ego);

// Kinematic limits of the rejection filter.
inline constexpr double kMaxStep = 12.0;       // m per 0.5 s
inline constexpr double kMaxAccel = 8.0;       // m/s^2
inline constexpr double kMaxCurvature = 0.3;   // 1/m

/// Sum of limit excesses, plus the distance of each waypoint outside the window. 0 means feasible.
double violation(const traj::Trajectory& traj, const RasterWindow& window = {});

struct FilterResult {
  std::vector<std::size_t> survivors;  // indices into the candidate list, ascending
  bool fallback = false;               // every candidate failed; kept the least violating
};

FilterResult rejection_filter(std::span<const traj::Trajectory> cands, const RasterWindow& window = {});

/// Index (into cands) of the best survivor: highest PDMS, then higher EP, then lowest index.
std::size_t select_top1(std::span<const traj::Trajectory> cands, std::span<const std::size_t> survivors,
                        const ScoringContext& ctx);

}  // namespace diffplan::eval
