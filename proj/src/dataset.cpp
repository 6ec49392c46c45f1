#include "diffplan/dataset.hpp"

#include <fstream>
#include <json.hpp>

#include "diffplan/error.hpp"

namespace diffplan::app {

using nlohmann::json;

namespace {

json point(Vec2 p) { return json::array({p.x, p.y}); }

Vec2 to_point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string episode_to_json(const sim::EpisodeRecord& e) {
  json j;
  j["seed"] = e.scene.seed;
  j["kind"] = std::string(sim::to_string(e.scene.kind));
  json line = json::array();
  for (Vec2 p : e.scene.centerline.points()) line.push_back(point(p));
  j["centerline"] = std::move(line);
  j["half_width"] = e.scene.corridor_half_width;
  j["speed_limit"] = e.scene.speed_limit;
  json obs = json::array();
  for (const auto& o : e.scene.obstacles) {
    obs.push_back({{"center", point(o.center)},
                   {"heading", o.heading},
                   {"half_extent", point(o.half_extent)},
                   {"velocity", point(o.velocity)}});
  }
  j["obstacles"] = std::move(obs);
  j["ego"] = {{"velocity", e.ego.velocity},
              {"acceleration", e.ego.acceleration},
              {"command", std::string(sim::to_string(e.ego.command))}};
  json hist = json::array();
  for (Vec2 p : e.history) hist.push_back(point(p));
  j["history"] = std::move(hist);
  json expert = json::array();
  for (Vec2 p : e.expert.waypoints) expert.push_back(point(p));
  j["expert"] = std::move(expert);
  return j.dump();
}

sim::EpisodeRecord episode_from_json(const std::string& line) {
  const json j = json::parse(line);
  sim::EpisodeRecord e;
  e.scene.seed = j.at("seed").get<std::uint64_t>();
  const auto kind = sim::parse_scene_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown scene kind");
  e.scene.kind = *kind;
  std::vector<Vec2> pts;
  for (const auto& p : j.at("centerline")) pts.push_back(to_point(p));
  e.scene.centerline = Polyline(std::move(pts));
  e.scene.corridor_half_width = j.at("half_width").get<double>();
  e.scene.speed_limit = j.at("speed_limit").get<double>();
  for (const auto& o : j.at("obstacles")) {
    e.scene.obstacles.push_back({to_point(o.at("center")), o.at("heading").get<double>(), to_point(o.at("half_extent")),
                                 to_point(o.at("velocity"))});
  }
  const json& ego = j.at("ego");
  e.ego.velocity = ego.at("velocity").get<double>();
  e.ego.acceleration = ego.at("acceleration").get<double>();
  const auto cmd = sim::parse_command(ego.at("command").get<std::string>());
  if (!cmd) throw std::invalid_argument("unknown command");
  e.ego.command = *cmd;
  const json& hist = j.at("history");
  if (hist.size() != sim::kHistoryLength) throw std::invalid_argument("history must have 4 points");
  for (std::size_t k = 0; k < sim::kHistoryLength; ++k) e.history[k] = to_point(hist[k]);
  const json& expert = j.at("expert");
  if (expert.size() != traj::kHorizon) throw std::invalid_argument("expert must have 8 waypoints");
  for (std::size_t k = 0; k < traj::kHorizon; ++k) e.expert.waypoints[k] = to_point(expert[k]);
  return e;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<sim::EpisodeRecord>& episodes) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& e : episodes) os << episode_to_json(e) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<sim::EpisodeRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<sim::EpisodeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(episode_from_json(line));
    } catch (const std::exception& ex) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

Splits generate_splits(std::size_t n, std::uint64_t seed) {
  auto all = sim::make_dataset(n, seed);
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  Splits s;
  s.train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + n_train));
  s.val.assign(std::make_move_iterator(all.begin() + n_train), std::make_move_iterator(all.begin() + n_train + n_val));
  s.test.assign(std::make_move_iterator(all.begin() + n_train + n_val), std::make_move_iterator(all.end()));
  return s;
}

void write_splits(const std::filesystem::path& dir, const Splits& splits) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_jsonl(dir / "train.jsonl", splits.train);
  write_jsonl(dir / "val.jsonl", splits.val);
  write_jsonl(dir / "test.jsonl", splits.test);
}

Splits read_splits(const std::filesystem::path& dir) {
  return {read_jsonl(dir / "train.jsonl"), read_jsonl(dir / "val.jsonl"), read_jsonl(dir / "test.jsonl")};
}

}  // namespace diffplan::app
