#include "diffplan/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "diffplan/error.hpp"

namespace diffplan::app {

std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, {0xe7a1, index}); }

PlanResult plan_episode(const Planner* planner, const sim::EpisodeRecord& episode, const eval::ScoringContext& ctx,
                        std::size_t n, std::uint64_t seed) {
  PlanResult r;
  if (planner) {
    r.candidates = planner->sample(episode, n, seed);
  } else {
    r.candidates.push_back(constant_velocity(episode.ego));
  }
  r.survivors = eval::rejection_filter(r.candidates, ctx.window).survivors;
  r.selected = eval::select_top1(r.candidates, r.survivors, ctx);
  return r;
}

EvalReport evaluate(const Planner* planner, const std::vector<sim::EpisodeRecord>& test, const RunConfig& cfg) {
  EvalReport report;
  const std::size_t count = cfg.eval_limit > 0 ? std::min(cfg.eval_limit, test.size()) : test.size();
  for (std::size_t i = 0; i < count; ++i) {
    const auto& e = test[i];
    const eval::ScoringContext ctx(e.scene, e.ego, e.expert);
    const PlanResult plan = plan_episode(planner, e, ctx, cfg.candidates, sample_seed(cfg.seed, i));
    SampleMetrics m;
    m.sample_id = i;
    m.scores = eval::sub_scores(plan.candidates[plan.selected], ctx);
    m.pdms = eval::pdm_score(m.scores);
    m.n_surviving = plan.survivors.size();
    if (cfg.post_filter_diversity) {
      std::vector<traj::Trajectory> kept;
      for (std::size_t k : plan.survivors) kept.push_back(plan.candidates[k]);
      m.diversity = eval::diversity(kept, ctx.window);
    } else {
      m.diversity = eval::diversity(plan.candidates, ctx.window);
    }
    report.rows.push_back(m);
  }
  report.summary = summarize(report.rows);
  return report;
}

MetricsSummary summarize(const std::vector<SampleMetrics>& rows) {
  MetricsSummary s;
  if (rows.empty()) return s;
  for (const auto& r : rows) {
    s.nc += r.scores.nc;
    s.dac += r.scores.dac;
    s.ep += r.scores.ep;
    s.ttc += r.scores.ttc;
    s.comfort += r.scores.comfort;
    s.pdms += r.pdms;
    s.diversity += r.diversity;
    s.n_surviving += static_cast<double>(r.n_surviving);
  }
  const double n = static_cast<double>(rows.size());
  const double pct = 100.0 / n;
  s.nc *= pct;
  s.dac *= pct;
  s.ep *= pct;
  s.ttc *= pct;
  s.comfort *= pct;
  s.pdms *= pct;
  s.diversity *= pct;
  s.n_surviving /= n;
  return s;
}

std::string metrics_csv(const EvalReport& report) {
  std::ostringstream os;
  char buf[256];
  os << "sample_id,NC,DAC,EP,TTC,Comfort,PDMS,D,N_surviving\n";
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.0f,%.0f,%.6f,%.0f,%.0f,%.6f,%.6f,%zu\n", r.sample_id, r.scores.nc,
                  r.scores.dac, r.scores.ep, r.scores.ttc, r.scores.comfort, r.pdms, r.diversity, r.n_surviving);
    os << buf;
  }
  const MetricsSummary& s = report.summary;
  std::snprintf(buf, sizeof buf, "mean,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", s.nc, s.dac, s.ep, s.ttc, s.comfort,
                s.pdms, s.diversity, s.n_surviving);
  os << buf;
  return os.str();
}

void write_metrics_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << metrics_csv(report);
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace diffplan::app
