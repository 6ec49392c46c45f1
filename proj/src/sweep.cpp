#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "diffplan/error.hpp"
#include "diffplan/evaluation.hpp"
#include "diffplan/training.hpp"

namespace diffplan::app {

namespace {

const char* config_key(const std::string& axis) {
  if (axis == "T") return "T";
  if (axis == "batch") return "batch";
  if (axis == "beta") return "beta";
  if (axis == "candidates") return "candidates";
  if (axis == "placement") return "placement";
  throw ConfigError("unknown sweep axis '" + axis + "' (expected T, batch, beta, candidates or placement)");
}

}  // namespace

std::vector<std::string> default_sweep_values(const std::string& axis) {
  config_key(axis);
  if (axis == "T") return {"5", "10", "20"};
  if (axis == "batch") return {"32", "64", "128"};
  if (axis == "beta") return {"0", "0.02", "0.05", "0.1"};
  if (axis == "candidates") return {"10", "15", "30"};
  return {"outer", "inner", "off"};
}

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis, const std::vector<std::string>& values,
                            const Splits& splits, const std::function<void(const std::string&)>& progress) {
  const char* key = config_key(axis);
  std::vector<SweepRow> rows;
  std::optional<Planner> shared;
  for (const auto& value : values) {
    RunConfig cfg = base;
    cfg.set(key, value);
    cfg.validate();
    const bool retrain = axis != "candidates";
    cfg.out = base.out / (retrain ? axis + "=" + value : std::string("model"));
    if (retrain || !shared) {
      if (progress) progress("training " + axis + "=" + value);
      train(cfg, splits);
      shared.emplace(Planner::load(cfg.out / "best.ckpt"));
    }
    if (progress) progress("evaluating " + axis + "=" + value);
    const EvalReport report = evaluate(&*shared, splits.test, cfg);
    std::filesystem::create_directories(base.out / (axis + "=" + value));
    write_metrics_csv(base.out / (axis + "=" + value) / "metrics.csv", report);
    rows.push_back({axis, value, report.summary});
    if (retrain) shared.reset();
  }
  std::ofstream os(base.out / "sweep.csv", std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + (base.out / "sweep.csv").string());
  os << sweep_csv(rows);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "axis,value,PDMS,D,NC,DAC,EP,TTC,Comfort,N_surviving\n";
  char buf[256];
  for (const auto& r : rows) {
    const MetricsSummary& s = r.summary;
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", s.pdms, s.diversity, s.nc, s.dac, s.ep,
                  s.ttc, s.comfort, s.n_surviving);
    os << r.axis << ',' << r.value << buf;
  }
  return os.str();
}

}  // namespace diffplan::app
