#pragma once

// Small model instances shared by the unit tests and the acceptance binary.

#include <memory>
#include <vector>

#include "diffplan/denoiser.hpp"
#include "diffplan/diffusion.hpp"
#include "diffplan/featenc.hpp"
#include "diffplan/params.hpp"

namespace fixture {

using namespace diffplan;

struct TinyModel {
  grad::ParamStore store;
  feat::FeatureEncoder encoder;
  den::Denoiser denoiser;

  TinyModel(std::uint64_t seed, std::size_t width = 16, std::size_t heads = 1)
      : TinyModel(seed, width, heads, std::make_unique<Rng>(seed)) {}

  std::vector<grad::Parameter*> params(const std::string& prefix = "") {
    std::vector<grad::Parameter*> out;
    for (auto& [name, p] : store.all()) {
      if (name.rfind(prefix, 0) == 0) out.push_back(&p);
    }
    return out;
  }

 private:
  TinyModel(std::uint64_t, std::size_t width, std::size_t heads, std::unique_ptr<Rng> init)
      : encoder(store, {width, width}, *init), denoiser(store, {width, heads, width}, *init) {}
};

// Random encoder inputs of batch `b` (not tied to any scene).
inline feat::EncoderInputs random_inputs(std::size_t b, Rng& rng) {
  feat::EncoderInputs in;
  in.batch = b;
  in.patches = grad::random_normal({b * feat::kSceneTokens, feat::kPatchDim}, 0.5, rng);
  in.history = grad::random_normal({b, feat::kHistoryDim}, 1.0, rng);
  in.ego = grad::random_normal({b, feat::kEgoDim}, 1.0, rng);
  return in;
}

// Predictor closure over a model and fixed inputs; features are re-encoded on
// every graph so encoder parameters receive gradients too.
inline diff::NoisePredictor predictor(const TinyModel& m, const feat::EncoderInputs& in,
                                      den::DecorrTap tap = den::DecorrTap::kOuter) {
  return [&m, &in, tap](grad::Graph& g, grad::Var x, std::span<const int> steps) {
    const feat::FeatureGroup f = m.encoder.encode(g, in);
    return m.denoiser.predict(g, x, steps, f, tap);
  };
}

}  // namespace fixture
