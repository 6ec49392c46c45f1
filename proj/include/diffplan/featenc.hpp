#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "diffplan/autograd.hpp"
#include "diffplan/params.hpp"
#include "diffplan/scenesim.hpp"

namespace diffplan::feat {

// 32 x 32 cells of 2 m over an ego-centred 64 m window, 3 channels.
inline constexpr std::size_t kRasterCells = 32;
inline constexpr std::size_t kRasterChannels = 3;
inline constexpr double kRasterCellSize = 2.0;
inline constexpr double kRasterHalfExtent = 32.0;
inline constexpr std::size_t kPatchCells = 8;
inline constexpr std::size_t kSceneTokens = (kRasterCells / kPatchCells) * (kRasterCells / kPatchCells);
inline constexpr std::size_t kPatchDim = kPatchCells * kPatchCells * kRasterChannels;
inline constexpr std::size_t kHistoryDim = 2 * sim::kHistoryLength;
inline constexpr std::size_t kEgoDim = 5;

enum Channel : std::size_t { kDrivable = 0, kOccupancy = 1, kFlow = 2 };

/// Channel-major grid; cell (i, j) covers x from -32 + 2i, y from -32 + 2j.
struct SceneRaster {
  std::vector<double> values = std::vector<double>(kRasterChannels * kRasterCells * kRasterCells, 0.0);

  double& at(std::size_t c, std::size_t i, std::size_t j) { return values[(c * kRasterCells + i) * kRasterCells + j]; }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return values[(c * kRasterCells + i) * kRasterCells + j];
  }
};

Vec2 cell_center(std::size_t i, std::size_t j);
SceneRaster rasterize(const sim::SceneSpec& scene);

/// Row p = (i / 8) * 4 + j / 8 holds the 8x8x3 patch, ordered (channel, i, j).
grad::Tensor raster_patches(const SceneRaster& raster);
/// Flattened history (oldest first), scaled by 0.1.
std::array<double, kHistoryDim> history_features(const std::array<Vec2, sim::kHistoryLength>& history);
/// (v / 10, a / 5, one-hot command).
std::array<double, kEgoDim> ego_features(const sim::EgoStatus& ego);

/// Raw encoder inputs for a batch of B samples.
struct EncoderInputs {
  grad::Tensor patches;  // (B * 16) x 192
  grad::Tensor history;  // B x 8
  grad::Tensor ego;      // B x 5
  std::size_t batch = 0;
};

EncoderInputs make_inputs(std::span<const sim::EpisodeRecord* const> episodes);

/// Conditioning for the denoiser. Every field is a node of the same graph.
struct FeatureGroup {
  grad::Var scene_tokens;  // (B * 16) x d
  grad::Var emb_action;    // B x d
  grad::Var emb_ego;       // B x d
  std::size_t batch = 0;
};

struct EncoderConfig {
  std::size_t width = 128;
  std::size_t hidden = 128;
};

class FeatureEncoder {
 public:
  /// Registers parameters under "featenc/" in `store`.
  FeatureEncoder(grad::ParamStore& store, const EncoderConfig& cfg, Rng& init);

  FeatureGroup encode(grad::Graph& g, const EncoderInputs& in) const;

  grad::Var encode_scene(grad::Graph& g, const grad::Tensor& patches, std::size_t batch) const;
  grad::Var encode_action_history(grad::Graph& g, const grad::Tensor& history) const;
  grad::Var encode_ego(grad::Graph& g, const grad::Tensor& ego) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Mlp {
    grad::Parameter *w1, *b1, *w2, *b2;
  };
  grad::Var mlp(grad::Graph& g, const Mlp& m, const grad::Tensor& x) const;

  EncoderConfig cfg_;
  grad::Parameter* patch_w_;
  grad::Parameter* patch_b_;
  grad::Parameter* patch_pos_;
  Mlp action_;
  Mlp ego_;
};

}  // namespace diffplan::feat
