#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "diffplan/config.hpp"
#include "diffplan/dataset.hpp"
#include "diffplan/evalsuite.hpp"
#include "diffplan/planner.hpp"

namespace diffplan::app {

struct SampleMetrics {
  std::size_t sample_id = 0;
  eval::SubScores scores;
  double pdms = 0.0;
  double diversity = 0.0;
  std::size_t n_surviving = 0;
};

/// Dataset means; the score columns are x100.
struct MetricsSummary {
  double nc = 0, dac = 0, ep = 0, ttc = 0, comfort = 0, pdms = 0, diversity = 0, n_surviving = 0;
};

struct EvalReport {
  std::vector<SampleMetrics> rows;
  MetricsSummary summary;
};

/// Result of planning one episode: every candidate, the filter survivors and the pick.
struct PlanResult {
  std::vector<traj::Trajectory> candidates;
  std::vector<std::size_t> survivors;
  std::size_t selected = 0;
};

/// Sample -> rejection filter -> top-1 by PDMS. A null planner gives the constant-velocity baseline.
PlanResult plan_episode(const Planner* planner, const sim::EpisodeRecord& episode, const eval::ScoringContext& ctx,
                        std::size_t n, std::uint64_t seed);

/// Candidate seed for test sample `index`.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t index);

/// Scores every test episode (the first cfg.eval_limit when nonzero).
EvalReport evaluate(const Planner* planner, const std::vector<sim::EpisodeRecord>& test, const RunConfig& cfg);

MetricsSummary summarize(const std::vector<SampleMetrics>& rows);
std::string metrics_csv(const EvalReport& report);
void write_metrics_csv(const std::filesystem::path& path, const EvalReport& report);

/// SVG 1.1 bird's-eye view: corridor, obstacles, ego, history and one
/// <polyline> per candidate; `selected` (if < size) is drawn highlighted.
std::string render_svg(const sim::EpisodeRecord& episode, const std::vector<traj::Trajectory>& candidates,
                       std::size_t selected);

struct SweepRow {
  std::string axis;
  std::string value;
  MetricsSummary summary;
};

/// Default grid values for an axis: T, batch, beta, candidates or placement.
std::vector<std::string> default_sweep_values(const std::string& axis);

/// Trains and evaluates one model per value (a single model for the
/// candidates axis) under base.out/<axis>=<value>; writes base.out/sweep.csv.
std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis, const std::vector<std::string>& values,
                            const Splits& splits, const std::function<void(const std::string&)>& progress = {});

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace diffplan::app
