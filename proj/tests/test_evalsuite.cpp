#include <doctest.h>

#include <cmath>
#include <set>

#include "diffplan/evalsuite.hpp"
#include "oracles.hpp"

using namespace diffplan;
using namespace diffplan::eval;

namespace {

sim::SceneSpec straight() {
  sim::SceneSpec s;
  s.centerline = Polyline({{0.0, 0.0}, {110.0, 0.0}});
  return s;
}

traj::Trajectory line(double step, double lateral = 0.0) {
  traj::Trajectory t;
  for (std::size_t k = 0; k < traj::kHorizon; ++k) t.waypoints[k] = {step * (k + 1), lateral * (k + 1)};
  return t;
}

std::vector<std::set<unsigned>> as_sets(const std::vector<RasterSet>& v) {
  std::vector<std::set<unsigned>> out;
  for (const auto& s : v) out.emplace_back(s.begin(), s.end());
  return out;
}

}  // namespace

TEST_SUITE("evalsuite") {
  TEST_CASE("composite score formula") {
    CHECK(pdm_score({}) == 1.0);
    SubScores half;
    half.ep = 0.5;
    CHECK(std::abs(pdm_score(half) - 9.5 / 12.0) < 1e-12);
    for (double SubScores::*gate : {&SubScores::nc, &SubScores::dac, &SubScores::ttc}) {
      SubScores s;
      s.*gate = 0.0;
      CHECK(pdm_score(s) == 0.0);
    }
  }

  TEST_CASE("diversity on hand-built sets") {
    const RasterSet a{1, 2}, b{2, 3};
    const std::vector<RasterSet> ab{a, b};
    CHECK(diversity_of_sets(ab) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const std::vector<RasterSet> same{a, a, a};
    CHECK(diversity_of_sets(same) == 0.0);
    const std::vector<RasterSet> one{b};
    CHECK(diversity_of_sets(one) == 0.0);
  }

  TEST_CASE("diversity matches brute-force set arithmetic") {
    Rng rng(71);
    for (int n = 0; n < 100; ++n) {
      std::vector<RasterSet> sets(1 + rng.below(6));
      for (auto& s : sets) {
        std::set<std::uint32_t> tmp;
        const auto size = rng.below(12);
        for (std::uint64_t k = 0; k < size; ++k) tmp.insert(static_cast<std::uint32_t>(rng.below(20)));
        s.assign(tmp.begin(), tmp.end());
      }
      sets[0].push_back(25);  // at least one nonempty set
      CHECK(diversity_of_sets(sets) == oracle::diversity_bruteforce(as_sets(sets)));
    }
  }

  TEST_CASE("swept footprints") {
    const RasterSet still = sweep(traj::Trajectory{});
    // 4 m x 1.8 m at 0.2 m: 20 x 9 cell centres inside
    CHECK(still.size() == 20 * 9);
    CHECK(std::is_sorted(still.begin(), still.end()));
    const RasterSet moving = sweep(line(2.0));
    CHECK(moving.size() > still.size());
    const std::vector<traj::Trajectory> same{line(2.0), line(2.0)};
    CHECK(diversity(same) == 0.0);
    const std::vector<traj::Trajectory> spread{line(2.0, -0.5), line(2.0, 0.5)};
    CHECK(diversity(spread) > 0.3);
  }

  TEST_CASE("drivable mask matches the pointwise corridor test") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto scene = sim::generate_scene(seed, sim::kAllKinds[seed]);
      const RasterWindow w;
      const DrivableMask mask(scene, w);
      for (std::uint32_t i = 0; i < w.nx * w.ny; i += 7) {
        CHECK(mask.at(i) == sim::point_in_drivable(scene, w.cell_center(i)));
      }
    }
  }

  TEST_CASE("scoring reference cases") {
    const auto data = sim::make_dataset(40, 3);
    for (const auto& e : data) {
      const SubScores s = sub_scores(e.expert, e.scene, e.ego);
      CHECK(pdm_score(s) == 1.0);
    }
    const sim::SceneSpec empty = straight();
    const sim::EgoStatus ego{5.0, 0.0, sim::Command::kFollow};
    const SubScores still = sub_scores(traj::Trajectory{}, empty, ego);
    CHECK(still.ep == 0.0);
    CHECK(still.nc == 1.0);
    CHECK(still.dac == 1.0);
    CHECK(still.ttc == 1.0);
    CHECK(still.comfort == 1.0);
    CHECK(pdm_score(still) == doctest::Approx(7.0 / 12.0));

    sim::SceneSpec blocked = straight();
    blocked.obstacles.push_back({{12.0, 0.0}, 0.0, {2.0, 0.9}, {0.0, 0.0}});
    const SubScores crash = sub_scores(line(2.5), blocked, ego);
    CHECK(crash.nc == 0.0);
    CHECK(pdm_score(crash) == 0.0);

    const SubScores off = sub_scores(line(2.0, 1.5), empty, ego);
    CHECK(off.dac == 0.0);
  }

  TEST_CASE("rejection filter") {
    std::vector<traj::Trajectory> ok{line(2.0), line(3.0), line(1.0, 0.1)};
    const auto all = rejection_filter(ok);
    CHECK(all.survivors == std::vector<std::size_t>{0, 1, 2});
    CHECK_FALSE(all.fallback);

    auto jump = line(2.0);
    jump.waypoints[4].x += 50.0;
    ok.push_back(jump);
    CHECK(rejection_filter(ok).survivors == std::vector<std::size_t>{0, 1, 2});

    std::vector<traj::Trajectory> bad;
    Rng rng(4);
    for (int i = 0; i < 6; ++i) {
      auto t = line(2.0);
      t.waypoints[2 + i % 4].y += rng.uniform(20.0, 60.0);
      bad.push_back(t);
    }
    const auto fb = rejection_filter(bad);
    REQUIRE(fb.survivors.size() == 1);
    CHECK(fb.fallback);
    std::size_t best = 0;
    for (std::size_t i = 1; i < bad.size(); ++i) {
      if (violation(bad[i]) < violation(bad[best])) best = i;
    }
    CHECK(fb.survivors[0] == best);
  }

  TEST_CASE("top-1 selection") {
    const auto rec = sim::make_episode(5, 0);
    const ScoringContext ctx = ScoringContext::with_expert(rec.scene, rec.ego);
    std::vector<traj::Trajectory> cands{traj::Trajectory{}, rec.expert, line(4.0, 2.0)};
    const std::vector<std::size_t> all{0, 1, 2};
    CHECK(select_top1(cands, all, ctx) == 1);
    const std::vector<std::size_t> only{2};
    CHECK(select_top1(cands, only, ctx) == 2);

    // two zero-score candidates: one crashes far ahead, one leaves the road early
    sim::SceneSpec blocked = straight();
    blocked.obstacles.push_back({{10.0, 0.0}, 0.0, {2.0, 0.9}, {0.0, 0.0}});
    const sim::EgoStatus ego{5.0, 0.0, sim::Command::kFollow};
    const ScoringContext bctx(blocked, ego, line(2.5));
    const std::vector<traj::Trajectory> tie{line(0.3, 1.5), line(2.5)};
    const SubScores a = sub_scores(tie[0], bctx), b = sub_scores(tie[1], bctx);
    REQUIRE(pdm_score(a) == 0.0);
    REQUIRE(pdm_score(b) == 0.0);
    REQUIRE(b.ep > a.ep);
    const std::vector<std::size_t> both{0, 1};
    CHECK(select_top1(tie, both, bctx) == 1);
  }
}
