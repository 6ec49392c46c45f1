#include "diffplan/planner.hpp"

#include "diffplan/error.hpp"

namespace diffplan::app {

using grad::Tensor;

Planner::Planner(const ModelConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), params_(std::make_unique<grad::ParamStore>()), schedule_(diff::build_schedule(cfg.T)) {
  Rng enc_rng(derive_seed(init_seed, {1}));
  Rng den_rng(derive_seed(init_seed, {2}));
  encoder_ = std::make_unique<feat::FeatureEncoder>(*params_, cfg.encoder, enc_rng);
  denoiser_ = std::make_unique<den::Denoiser>(*params_, cfg.denoiser, den_rng);
}

std::vector<traj::Trajectory> Planner::sample(const sim::EpisodeRecord& episode, std::size_t n,
                                              std::uint64_t seed) const {
  const sim::EpisodeRecord* one[] = {&episode};
  return sample(feat::make_inputs(one), n, seed);
}

namespace {

Tensor tile_rows(const Tensor& t, std::size_t times) {
  Tensor out({t.rows() * times, t.cols()});
  for (std::size_t k = 0; k < times; ++k) {
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(k * t.size()));
  }
  return out;
}

}  // namespace

std::vector<traj::Trajectory> Planner::sample(const feat::EncoderInputs& single, std::size_t n,
                                              std::uint64_t seed) const {
  if (single.batch != 1) throw ShapeMismatch("sampling takes the inputs of exactly one episode");
  Tensor scene, action, ego;
  {
    grad::Graph g(false);
    const feat::FeatureGroup f = encoder_->encode(g, single);
    scene = tile_rows(f.scene_tokens.value(), n);
    action = tile_rows(f.emb_action.value(), n);
    ego = tile_rows(f.emb_ego.value(), n);
  }
  const diff::NoisePredictor predict = [&](grad::Graph& g, grad::Var x, std::span<const int> steps) {
    const feat::FeatureGroup f{g.constant(scene), g.constant(action), g.constant(ego), n};
    return denoiser_->predict(g, x, steps, f, den::DecorrTap::kOuter);
  };
  const Tensor x0 = diff::sample_candidates(predict, n, schedule_, seed);
  std::vector<traj::Trajectory> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(traj::to_trajectory(normalizer.denormalize(x0.data().subspan(i * diff::kActionDim, diff::kActionDim))));
  }
  return out;
}

void Planner::export_to(grad::NamedTensors& out, bool with_optimizer) const {
  grad::export_params(*params_, "", out, with_optimizer);
  out["meta/model"] = Tensor({6}, std::vector<double>{static_cast<double>(cfg_.encoder.width),
                                                      static_cast<double>(cfg_.encoder.hidden),
                                                      static_cast<double>(cfg_.denoiser.width),
                                                      static_cast<double>(cfg_.denoiser.heads),
                                                      static_cast<double>(cfg_.denoiser.ffn), static_cast<double>(cfg_.T)});
  out["meta/norm.mean"] = Tensor({diff::kActionDim}, std::vector<double>(normalizer.mean.begin(), normalizer.mean.end()));
  out["meta/norm.std"] = Tensor({diff::kActionDim}, std::vector<double>(normalizer.std.begin(), normalizer.std.end()));
}

Planner Planner::import_from(const grad::NamedTensors& in) {
  auto get = [&](const std::string& key, std::size_t size) -> const Tensor& {
    auto it = in.find(key);
    if (it == in.end() || it->second.size() != size) throw IoError("checkpoint lacks a valid " + key + " entry");
    return it->second;
  };
  const Tensor& m = get("meta/model", 6);
  ModelConfig cfg;
  cfg.encoder.width = static_cast<std::size_t>(m[0]);
  cfg.encoder.hidden = static_cast<std::size_t>(m[1]);
  cfg.denoiser.width = static_cast<std::size_t>(m[2]);
  cfg.denoiser.heads = static_cast<std::size_t>(m[3]);
  cfg.denoiser.ffn = static_cast<std::size_t>(m[4]);
  cfg.T = static_cast<int>(m[5]);
  Planner p(cfg, 0);
  grad::import_params(*p.params_, "", in);
  const Tensor& mean = get("meta/norm.mean", diff::kActionDim);
  const Tensor& std = get("meta/norm.std", diff::kActionDim);
  for (std::size_t i = 0; i < diff::kActionDim; ++i) {
    p.normalizer.mean[i] = mean[i];
    p.normalizer.std[i] = std[i];
  }
  return p;
}

void Planner::save(const std::filesystem::path& path) const {
  grad::NamedTensors t;
  export_to(t, false);
  grad::save_tensors(path, t);
}

Planner Planner::load(const std::filesystem::path& path) { return import_from(grad::load_tensors(path)); }

traj::Trajectory constant_velocity(const sim::EgoStatus& ego) {
  traj::Trajectory t;
  for (std::size_t k = 0; k < traj::kHorizon; ++k) {
    t.waypoints[k] = {ego.velocity * traj::kStepSeconds * static_cast<double>(k + 1), 0.0};
  }
  return t;
}

Tensor label_rows(std::span<const sim::EpisodeRecord* const> episodes, const diff::ActionNormalizer& norm) {
  Tensor out({episodes.size(), diff::kActionDim});
  for (std::size_t b = 0; b < episodes.size(); ++b) {
    const auto x = norm.normalize(traj::to_actions(episodes[b]->expert));
    std::copy(x.begin(), x.end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * diff::kActionDim));
  }
  return out;
}

}  // namespace diffplan::app
