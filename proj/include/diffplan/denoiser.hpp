#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "diffplan/diffusion.hpp"
#include "diffplan/featenc.hpp"
#include "diffplan/params.hpp"

namespace diffplan::den {

inline constexpr std::size_t kBlocks = 3;

struct DenoiserConfig {
  std::size_t width = 128;
  std::size_t heads = 4;
  std::size_t ffn = 256;
};

/// Where the decorrelation representation is read: after the last fusion
/// block (outer) or after block 2 (inner). Never changes eps_hat.
enum class DecorrTap { kOuter, kInner };

struct DenoiserOutput {
  grad::Var eps_hat;  // B x 16
  grad::Var m_outer;  // B x d, mean over the 8 action tokens after block 3
  grad::Var m_inner;  // B x d, same after block 2

  grad::Var representation(DecorrTap tap) const { return tap == DecorrTap::kInner ? m_inner : m_outer; }
};

/// Sinusoidal embedding of integer steps, B x width.
grad::Tensor timestep_embedding(std::span<const int> steps, std::size_t width);

class Denoiser {
 public:
  /// Registers parameters under "denoiser/" in `store`.
  Denoiser(grad::ParamStore& store, const DenoiserConfig& cfg, Rng& init);

  /// x_t is B x 16 (normalised actions, row-major 8 x 2); feat has batch B.
  DenoiserOutput forward(grad::Graph& g, grad::Var x_t, std::span<const int> steps,
                         const feat::FeatureGroup& feat) const;

  /// Same computation, returning the representation chosen by `tap`.
  diff::Prediction predict(grad::Graph& g, grad::Var x_t, std::span<const int> steps, const feat::FeatureGroup& feat,
                           DecorrTap tap) const;

  const DenoiserConfig& config() const { return cfg_; }

 private:
  struct Linear {
    grad::Parameter *w, *b;
  };
  struct Block {
    grad::Parameter *ln1_g, *ln1_b, *ln2_g, *ln2_b;
    std::array<grad::Parameter*, 8> attn;  // wq bq wk bk wv bv wo bo
    Linear ff1, ff2;
  };

  grad::Var apply(grad::Graph& g, const Linear& l, grad::Var x) const;

  DenoiserConfig cfg_;
  Linear in_proj_;
  grad::Parameter* pos_;
  Linear time1_, time2_;
  std::array<Block, kBlocks> blocks_;
  grad::Parameter *out_ln_g_, *out_ln_b_;
  Linear head_;
};

}  // namespace diffplan::den
