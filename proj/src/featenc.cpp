#include "diffplan/featenc.hpp"

#include <algorithm>
#include <cmath>

#include "diffplan/error.hpp"

namespace diffplan::feat {

using grad::Graph;
using grad::Tensor;
using grad::Var;

namespace {

constexpr double kFlowScale = 20.0;  // m/s mapped to 1

}  // namespace

Vec2 cell_center(std::size_t i, std::size_t j) {
  return {-kRasterHalfExtent + (static_cast<double>(i) + 0.5) * kRasterCellSize,
          -kRasterHalfExtent + (static_cast<double>(j) + 0.5) * kRasterCellSize};
}

SceneRaster rasterize(const sim::SceneSpec& scene) {
  SceneRaster r;
  std::vector<OrientedRect> boxes;
  boxes.reserve(scene.obstacles.size());
  for (const auto& o : scene.obstacles) boxes.push_back(o.at(0.0));

  for (std::size_t i = 0; i < kRasterCells; ++i) {
    for (std::size_t j = 0; j < kRasterCells; ++j) {
      const Vec2 c = cell_center(i, j);
      r.at(kDrivable, i, j) = sim::point_in_drivable(scene, c) ? 1.0 : 0.0;
      for (std::size_t k = 0; k < boxes.size(); ++k) {
        bool hit = false;
        for (int a = -1; a <= 1 && !hit; ++a) {
          for (int b = -1; b <= 1 && !hit; ++b) {
            hit = boxes[k].contains(c + Vec2{a * kRasterCellSize / 3.0, b * kRasterCellSize / 3.0});
          }
        }
        if (!hit) continue;
        r.at(kOccupancy, i, j) = 1.0;
        const double flow = std::min(1.0, norm(scene.obstacles[k].velocity) / kFlowScale);
        r.at(kFlow, i, j) = std::max(r.at(kFlow, i, j), flow);
      }
    }
  }
  return r;
}

Tensor raster_patches(const SceneRaster& raster) {
  constexpr std::size_t per_side = kRasterCells / kPatchCells;
  Tensor out({kSceneTokens, kPatchDim});
  for (std::size_t p = 0; p < kSceneTokens; ++p) {
    const std::size_t i0 = (p / per_side) * kPatchCells;
    const std::size_t j0 = (p % per_side) * kPatchCells;
    std::size_t k = 0;
    for (std::size_t c = 0; c < kRasterChannels; ++c) {
      for (std::size_t i = 0; i < kPatchCells; ++i) {
        for (std::size_t j = 0; j < kPatchCells; ++j) out.at(p, k++) = raster.at(c, i0 + i, j0 + j);
      }
    }
  }
  return out;
}

std::array<double, kHistoryDim> history_features(const std::array<Vec2, sim::kHistoryLength>& history) {
  std::array<double, kHistoryDim> f{};
  for (std::size_t k = 0; k < history.size(); ++k) {
    f[2 * k] = 0.1 * history[k].x;
    f[2 * k + 1] = 0.1 * history[k].y;
  }
  return f;
}

std::array<double, kEgoDim> ego_features(const sim::EgoStatus& ego) {
  std::array<double, kEgoDim> f{ego.velocity / 10.0, ego.acceleration / 5.0, 0.0, 0.0, 0.0};
  f[2 + static_cast<std::size_t>(ego.command)] = 1.0;
  return f;
}

EncoderInputs make_inputs(std::span<const sim::EpisodeRecord* const> episodes) {
  const std::size_t B = episodes.size();
  EncoderInputs in;
  in.batch = B;
  in.patches = Tensor({B * kSceneTokens, kPatchDim});
  in.history = Tensor({B, kHistoryDim});
  in.ego = Tensor({B, kEgoDim});
  for (std::size_t b = 0; b < B; ++b) {
    const Tensor patches = raster_patches(rasterize(episodes[b]->scene));
    std::copy(patches.data().begin(), patches.data().end(),
              in.patches.data().begin() + static_cast<std::ptrdiff_t>(b * kSceneTokens * kPatchDim));
    const auto h = history_features(episodes[b]->history);
    std::copy(h.begin(), h.end(), in.history.data().begin() + static_cast<std::ptrdiff_t>(b * kHistoryDim));
    const auto e = ego_features(episodes[b]->ego);
    std::copy(e.begin(), e.end(), in.ego.data().begin() + static_cast<std::ptrdiff_t>(b * kEgoDim));
  }
  return in;
}

FeatureEncoder::FeatureEncoder(grad::ParamStore& store, const EncoderConfig& cfg, Rng& init) : cfg_(cfg) {
  const std::size_t d = cfg.width;
  const std::size_t h = cfg.hidden;
  auto weight = [&](const std::string& name, std::size_t in, std::size_t out) {
    return &store.add("featenc/" + name, grad::random_normal({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), init));
  };
  auto zeros = [&](const std::string& name, std::size_t n) { return &store.add("featenc/" + name, Tensor({n})); };

  patch_w_ = weight("scene.w", kPatchDim, d);
  patch_b_ = zeros("scene.b", d);
  patch_pos_ = &store.add("featenc/scene.pos", grad::random_normal({kSceneTokens, d}, 0.1, init));
  action_ = {weight("action.w1", kHistoryDim, h), zeros("action.b1", h), weight("action.w2", h, d),
             zeros("action.b2", d)};
  ego_ = {weight("ego.w1", kEgoDim, h), zeros("ego.b1", h), weight("ego.w2", h, d), zeros("ego.b2", d)};
}

Var FeatureEncoder::mlp(Graph& g, const Mlp& m, const Tensor& x) const {
  Var h = grad::gelu(grad::linear(g.constant(x), g.parameter(*m.w1), g.parameter(*m.b1)));
  return grad::linear(h, g.parameter(*m.w2), g.parameter(*m.b2));
}

Var FeatureEncoder::encode_scene(Graph& g, const Tensor& patches, std::size_t batch) const {
  if (patches.rows() != batch * kSceneTokens || patches.cols() != kPatchDim) {
    throw ShapeMismatch("scene patches have shape " + grad::shape_string(patches.shape()));
  }
  Var tokens = grad::linear(g.constant(patches), g.parameter(*patch_w_), g.parameter(*patch_b_));
  return grad::add_tiled(tokens, g.parameter(*patch_pos_));
}

Var FeatureEncoder::encode_action_history(Graph& g, const Tensor& history) const {
  if (history.cols() != kHistoryDim) throw ShapeMismatch("history features must have 8 columns");
  return mlp(g, action_, history);
}

Var FeatureEncoder::encode_ego(Graph& g, const Tensor& ego) const {
  if (ego.cols() != kEgoDim) throw ShapeMismatch("ego features must have 5 columns");
  return mlp(g, ego_, ego);
}

FeatureGroup FeatureEncoder::encode(Graph& g, const EncoderInputs& in) const {
  return {encode_scene(g, in.patches, in.batch), encode_action_history(g, in.history), encode_ego(g, in.ego),
          in.batch};
}

}  // namespace diffplan::feat
