#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "diffplan/config.hpp"
#include "diffplan/dataset.hpp"
#include "diffplan/error.hpp"
#include "diffplan/evaluation.hpp"
#include "diffplan/planner.hpp"
#include "diffplan/training.hpp"

using namespace diffplan;
using namespace diffplan::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("diffplan_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

RunConfig tiny_config(const fs::path& out) {
  RunConfig c;
  c.out = out;
  c.episodes = 60;
  c.batch = 8;
  c.epochs = 3;
  c.width = 16;
  c.heads = 2;
  c.ffn = 16;
  c.candidates = 4;
  c.max_lr = 1e-3;
  return c;
}

}  // namespace

TEST_SUITE("app") {
  TEST_CASE("config round trips through its text form") {
    RunConfig c;
    c.seed = 99;
    c.T = 20;
    c.beta = 0.1 / 3.0;
    c.max_lr = 3.3e-5;
    c.placement = Placement::kInner;
    c.post_filter_diversity = true;
    c.out = "some dir/run";
    CHECK(RunConfig::parse(c.serialize()) == c);
    CHECK(RunConfig::parse(RunConfig{}.serialize()) == RunConfig{});
  }

  TEST_CASE("config layering and validation") {
    RunConfig base;
    base.batch = 32;
    const RunConfig c = RunConfig::parse("# comment\nT = 5\nbeta=0.05\n", base);
    CHECK(c.T == 5);
    CHECK(c.beta == 0.05);
    CHECK(c.batch == 32);
    CHECK_THROWS_AS(RunConfig::parse("colour = red"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("T = ten"), ConfigError);
    RunConfig bad;
    bad.T = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = RunConfig{};
    bad.heads = 3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("dataset generation is deterministic and split cleanly") {
    const fs::path a = scratch("data_a"), b = scratch("data_b");
    const Splits s = generate_splits(50, 3);
    CHECK(s.train.size() == 40);
    CHECK(s.val.size() == 5);
    CHECK(s.test.size() == 5);
    write_splits(a, s);
    write_splits(b, generate_splits(50, 3));
    for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) CHECK(slurp(a / f) == slurp(b / f));

    std::set<std::uint64_t> train_seeds;
    for (const auto& e : s.train) train_seeds.insert(e.scene.seed);
    for (const auto* split : {&s.val, &s.test}) {
      for (const auto& e : *split) CHECK(train_seeds.count(e.scene.seed) == 0);
    }

    const Splits back = read_splits(a);
    REQUIRE(back.test.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(episode_to_json(back.test[i]) == episode_to_json(s.test[i]));
      CHECK(back.test[i].expert == s.test[i].expert);
    }
    CHECK_THROWS_AS(read_splits(scratch("data_missing")), IoError);
  }

  TEST_CASE("resumed training continues bit-exactly") {
    const Splits s = generate_splits(60, 2);
    const fs::path full_dir = scratch("train_full"), part_dir = scratch("train_part");
    const TrainResult full = train(tiny_config(full_dir), s);
    REQUIRE(full.log.size() == 3);
    const TrainResult part = train(tiny_config(part_dir), s, false, 2);
    REQUIRE(part.log.size() == 2);
    const TrainResult rest = train(tiny_config(part_dir), s, true);
    REQUIRE(rest.log.size() == 3);
    CHECK(rest.log[2].l_diff == full.log[2].l_diff);
    CHECK(rest.log[2].val_l_diff == full.log[2].val_l_diff);
    CHECK(rest.log[2].l_rep == full.log[2].l_rep);
    CHECK(slurp(part_dir / "last.ckpt") == slurp(full_dir / "last.ckpt"));
    CHECK(slurp(part_dir / "train_log.csv") == slurp(full_dir / "train_log.csv"));

    const auto log = read_train_log(full_dir / "train_log.csv");
    REQUIRE(log.size() == 3);
    for (const auto& e : log) {
      CHECK(std::isfinite(e.l_diff));
      CHECK(std::isfinite(e.l_rep));
      CHECK(e.spectrum.size() == kSpectrumLength);
    }
    CHECK(RunConfig::load(full_dir / "config.txt") == tiny_config(full_dir));
  }

  TEST_CASE("ablation run still logs the decorrelation loss") {
    const Splits s = generate_splits(60, 2);
    RunConfig c = tiny_config(scratch("train_b0"));
    c.beta = 0.0;
    c.epochs = 1;
    const TrainResult r = train(c, s);
    CHECK(r.log[0].l_rep > 0.0);
  }

  TEST_CASE("evaluation is deterministic and the baseline needs no model") {
    const Splits s = generate_splits(60, 2);
    const fs::path dir = scratch("eval");
    RunConfig c = tiny_config(dir);
    c.epochs = 1;
    train(c, s);
    const Planner p = Planner::load(dir / "best.ckpt");
    const EvalReport a = evaluate(&p, s.test, c);
    const EvalReport b = evaluate(&p, s.test, c);
    CHECK(metrics_csv(a) == metrics_csv(b));
    CHECK(a.rows.size() == s.test.size());
    CHECK(metrics_csv(a).rfind("sample_id,NC,DAC,EP,TTC,Comfort,PDMS,D,N_surviving\n", 0) == 0);

    c.candidates = 1;
    for (const auto& row : evaluate(&p, s.test, c).rows) CHECK(row.diversity == 0.0);

    const EvalReport base = evaluate(nullptr, s.test, c);
    CHECK(base.rows.size() == s.test.size());
    for (const auto& row : base.rows) CHECK(row.diversity == 0.0);
  }

  TEST_CASE("checkpoints restore the planner exactly") {
    Planner p(ModelConfig{{16, 16}, {16, 2, 16}, 5}, 4);
    p.normalizer.mean[3] = 0.5;
    const fs::path dir = scratch("ckpt");
    p.save(dir / "m.ckpt");
    const Planner q = Planner::load(dir / "m.ckpt");
    CHECK(q.config().T == 5);
    CHECK(q.normalizer.mean[3] == 0.5);
    const auto rec = sim::make_episode(1, 0);
    CHECK(p.sample(rec, 3, 7) == q.sample(rec, 3, 7));
  }

  TEST_CASE("svg rendering") {
    const auto rec = sim::make_episode(4, 2);
    std::vector<traj::Trajectory> cands(30);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      for (std::size_t k = 0; k < traj::kHorizon; ++k) cands[i].waypoints[k] = {2.0 * (k + 1), 0.1 * i * k};
    }
    const std::string svg = render_svg(rec, cands, 3);
    CHECK(count_of(svg, "<polyline") == 30);
    CHECK(count_of(svg, "candidate selected") == 1);
    CHECK(svg == render_svg(rec, cands, 3));
    const std::string empty = render_svg(rec, {}, 0);
    CHECK(count_of(empty, "<polyline") == 0);
    CHECK(count_of(empty, "<svg") == 1);
  }

  TEST_CASE("sweep axis defaults") {
    CHECK(default_sweep_values("T") == std::vector<std::string>{"5", "10", "20"});
    CHECK(default_sweep_values("beta") == std::vector<std::string>{"0", "0.02", "0.05", "0.1"});
    CHECK(default_sweep_values("candidates") == std::vector<std::string>{"10", "15", "30"});
    CHECK_THROWS_AS(default_sweep_values("colour"), ConfigError);
  }
}
