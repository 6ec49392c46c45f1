#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "diffplan/denoiser.hpp"
#include "diffplan/diffusion.hpp"
#include "diffplan/featenc.hpp"
#include "diffplan/params.hpp"

namespace diffplan::app {

struct ModelConfig {
  feat::EncoderConfig encoder;
  den::DenoiserConfig denoiser;
  int T = 10;
};

/// Encoder, denoiser, schedule and action statistics: everything a checkpoint holds.
class Planner {
 public:
  Planner(const ModelConfig& cfg, std::uint64_t init_seed);

  Planner(Planner&&) = default;
  Planner& operator=(Planner&&) = default;

  const ModelConfig& config() const { return cfg_; }
  grad::ParamStore& params() { return *params_; }
  const grad::ParamStore& params() const { return *params_; }
  const feat::FeatureEncoder& encoder() const { return *encoder_; }
  const den::Denoiser& denoiser() const { return *denoiser_; }
  const diff::NoiseSchedule& schedule() const { return schedule_; }

  diff::ActionNormalizer normalizer = diff::ActionNormalizer::identity();

  /// N denoised candidates for one episode, before any filtering.
  std::vector<traj::Trajectory> sample(const sim::EpisodeRecord& episode, std::size_t n, std::uint64_t seed) const;
  std::vector<traj::Trajectory> sample(const feat::EncoderInputs& single, std::size_t n, std::uint64_t seed) const;

  /// Model entries (parameters, "meta/model", "meta/norm.*"), optionally with Adam state.
  void export_to(grad::NamedTensors& out, bool with_optimizer) const;
  static Planner import_from(const grad::NamedTensors& in);

  void save(const std::filesystem::path& path) const;
  static Planner load(const std::filesystem::path& path);

 private:
  ModelConfig cfg_;
  std::unique_ptr<grad::ParamStore> params_;
  std::unique_ptr<feat::FeatureEncoder> encoder_;
  std::unique_ptr<den::Denoiser> denoiser_;
  diff::NoiseSchedule schedule_;
};

/// Ego keeps its current speed straight ahead.
traj::Trajectory constant_velocity(const sim::EgoStatus& ego);

/// Normalised action rows (B x 16) of the expert labels.
grad::Tensor label_rows(std::span<const sim::EpisodeRecord* const> episodes, const diff::ActionNormalizer& norm);

}  // namespace diffplan::app
