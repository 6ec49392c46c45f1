// Command-line front end: gen-data, train, eval, sweep, render.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "diffplan/dataset.hpp"
#include "diffplan/error.hpp"
#include "diffplan/evaluation.hpp"
#include "diffplan/training.hpp"

namespace {

using namespace diffplan;
using app::RunConfig;

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (char& c : f) {
    if (c == '_') c = '-';
  }
  return "--" + f;
}

std::string default_text(const std::string& key) {
  const std::string all = RunConfig{}.serialize();
  const std::string prefix = key + " = ";
  const auto at = all.find("\n" + prefix);
  const auto start = all.rfind(prefix, 0) == 0 ? 0 : at + 1;
  const auto end = all.find('\n', start);
  return all.substr(start + prefix.size(), end - start - prefix.size());
}

// Config flags shared by every verb. Values are applied as text after the
// config file, so CLI > file > defaults.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "key = value config file");
    for (const auto& key : RunConfig::keys()) {
      cmd->add_option_function<std::string>(
             flag_name(key), [this, key](const std::string& v) { values[key] = v; }, "default: " + default_text(key))
          ->type_name("VALUE");
    }
  }

  RunConfig resolve() const {
    RunConfig cfg = file.empty() ? RunConfig{} : RunConfig::load(file);
    for (const auto& [k, v] : values) cfg.set(k, v);
    cfg.validate();
    return cfg;
  }
};

void print_summary(const char* label, const app::MetricsSummary& s) {
  std::printf("%s  PDMS %.2f  NC %.2f  DAC %.2f  TTC %.2f  Comfort %.2f  EP %.2f  D %.2f  survivors %.2f\n", label,
              s.pdms, s.nc, s.dac, s.ttc, s.comfort, s.ep, s.diversity, s.n_surviving);
}

std::vector<sim::EpisodeRecord> read_split(const RunConfig& cfg, const std::string& split) {
  if (split != "train" && split != "val" && split != "test") throw ConfigError("split must be train, val or test");
  return app::read_jsonl(cfg.data / (split + ".jsonl"));
}

int run(int argc, char** argv) {
  CLI::App cli{"Anchor-free diffusion trajectory planner"};
  cli.require_subcommand(1);

  ConfigFlags gen_flags, train_flags, eval_flags, sweep_flags, render_flags;

  auto* gen = cli.add_subcommand("gen-data", "generate train/val/test splits (80/10/10) under --data");
  gen_flags.attach(gen);

  auto* train = cli.add_subcommand("train", "train a planner; writes checkpoints and train_log.csv under --out");
  train_flags.attach(train);
  bool resume = false;
  train->add_flag("--resume", resume, "continue from <out>/last.ckpt");

  auto* ev = cli.add_subcommand("eval", "score a checkpoint on the test split; writes a metrics CSV");
  eval_flags.attach(ev);
  std::string eval_ckpt, eval_metrics;
  bool eval_baseline = false;
  ev->add_option("--checkpoint", eval_ckpt, "default: <out>/best.ckpt");
  ev->add_option("--metrics", eval_metrics, "default: <out>/metrics.csv (metrics_baseline.csv with --baseline)");
  ev->add_flag("--baseline", eval_baseline, "constant-velocity baseline instead of a model");

  auto* sw = cli.add_subcommand("sweep", "train and evaluate over one configuration axis");
  sweep_flags.attach(sw);
  std::string axis;
  std::vector<std::string> axis_values;
  sw->add_option("--axis", axis, "T, batch, beta, candidates or placement")->required();
  sw->add_option("--values", axis_values, "grid values (defaults follow the axis)")->delimiter(',');

  auto* render = cli.add_subcommand("render", "draw one episode and its candidates as SVG");
  render_flags.attach(render);
  std::string render_ckpt, render_split = "test", svg_path;
  std::size_t render_index = 0;
  bool render_baseline = false;
  render->add_option("--index", render_index, "episode index within the split")->capture_default_str();
  render->add_option("--split", render_split, "train, val or test")->capture_default_str();
  render->add_option("--checkpoint", render_ckpt, "default: <out>/best.ckpt");
  render->add_flag("--baseline", render_baseline, "draw the constant-velocity trajectory instead");
  render->add_option("--svg", svg_path, "default: <out>/render_<split>_<index>.svg");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::kConfig);
  }

  if (gen->parsed()) {
    const RunConfig cfg = gen_flags.resolve();
    const app::Splits s = app::generate_splits(cfg.episodes, cfg.seed);
    app::write_splits(cfg.data, s);
    std::printf("wrote %zu/%zu/%zu episodes to %s\n", s.train.size(), s.val.size(), s.test.size(),
                cfg.data.string().c_str());
    return 0;
  }

  if (train->parsed()) {
    const RunConfig cfg = train_flags.resolve();
    const app::Splits s{read_split(cfg, "train"), read_split(cfg, "val"), {}};
    const app::TrainResult r = app::train(cfg, s, resume, 0, [](const app::EpochLog& e) {
      std::printf("epoch %zu  L_diff %.5f  L_rep %.5f  val %.5f  |corr| %.4f  lr %.3g\n", e.epoch, e.l_diff, e.l_rep,
                  e.val_l_diff, e.mean_abs_corr, e.lr);
      std::fflush(stdout);
    });
    std::printf("best epoch %zu (val L_diff %.5f)\n", r.best_epoch, r.best_val);
    return 0;
  }

  if (ev->parsed()) {
    const RunConfig cfg = eval_flags.resolve();
    const auto test = read_split(cfg, "test");
    std::optional<app::Planner> planner;
    if (!eval_baseline) planner.emplace(app::Planner::load(eval_ckpt.empty() ? cfg.out / "best.ckpt" : std::filesystem::path(eval_ckpt)));
    const app::EvalReport report = app::evaluate(planner ? &*planner : nullptr, test, cfg);
    std::filesystem::path out = eval_metrics;
    if (out.empty()) {
      std::filesystem::create_directories(cfg.out);
      out = cfg.out / (eval_baseline ? "metrics_baseline.csv" : "metrics.csv");
    }
    app::write_metrics_csv(out, report);
    print_summary(eval_baseline ? "baseline" : "model", report.summary);
    return 0;
  }

  if (sw->parsed()) {
    const RunConfig cfg = sweep_flags.resolve();
    const app::Splits s = app::read_splits(cfg.data);
    const auto values = axis_values.empty() ? app::default_sweep_values(axis) : axis_values;
    const auto rows = app::sweep(cfg, axis, values, s, [](const std::string& msg) {
      std::printf("%s\n", msg.c_str());
      std::fflush(stdout);
    });
    std::cout << app::sweep_csv(rows);
    return 0;
  }

  if (render->parsed()) {
    const RunConfig cfg = render_flags.resolve();
    const auto episodes = read_split(cfg, render_split);
    if (render_index >= episodes.size()) throw ConfigError("index out of range for split " + render_split);
    const auto& e = episodes[render_index];
    std::optional<app::Planner> planner;
    if (!render_baseline) {
      planner.emplace(app::Planner::load(render_ckpt.empty() ? cfg.out / "best.ckpt" : std::filesystem::path(render_ckpt)));
    }
    const eval::ScoringContext ctx(e.scene, e.ego, e.expert);
    const app::PlanResult plan = app::plan_episode(planner ? &*planner : nullptr, e, ctx, cfg.candidates,
                                                   app::sample_seed(cfg.seed, render_index));
    std::filesystem::path out = svg_path;
    if (out.empty()) {
      std::filesystem::create_directories(cfg.out);
      out = cfg.out / ("render_" + render_split + "_" + std::to_string(render_index) + ".svg");
    }
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + out.string() + " for writing");
    os << app::render_svg(e, plan.candidates, plan.selected);
    if (!os) throw IoError("failed writing " + out.string());
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const diffplan::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
