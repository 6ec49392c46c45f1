#include "diffplan/denoiser.hpp"

#include <cmath>
#include <string>

#include "diffplan/error.hpp"

namespace diffplan::den {

using grad::Graph;
using grad::Tensor;
using grad::Var;

namespace {

constexpr std::size_t kTokens = traj::kHorizon;

}  // namespace

Tensor timestep_embedding(std::span<const int> steps, std::size_t width) {
  const std::size_t half = width / 2;
  Tensor out({steps.size(), width});
  for (std::size_t r = 0; r < steps.size(); ++r) {
    for (std::size_t k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(1000.0) * static_cast<double>(k) / static_cast<double>(half));
      const double a = static_cast<double>(steps[r]) * freq;
      out.at(r, k) = std::sin(a);
      out.at(r, half + k) = std::cos(a);
    }
  }
  return out;
}

Denoiser::Denoiser(grad::ParamStore& store, const DenoiserConfig& cfg, Rng& init) : cfg_(cfg) {
  const std::size_t d = cfg.width;
  if (d % cfg.heads != 0) throw ShapeMismatch("denoiser width must be divisible by the head count");
  auto weight = [&](const std::string& name, std::size_t in, std::size_t out) {
    return &store.add("denoiser/" + name, grad::random_normal({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), init));
  };
  auto fill = [&](const std::string& name, std::size_t n, double v) {
    return &store.add("denoiser/" + name, Tensor({n}, v));
  };
  auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    return Linear{weight(name + ".w", in, out), fill(name + ".b", out, 0.0)};
  };

  in_proj_ = linear("in", diff::kActionDim, kTokens * d);
  pos_ = &store.add("denoiser/pos", grad::random_normal({kTokens, d}, 0.1, init));
  time1_ = linear("time1", d, d);
  time2_ = linear("time2", d, d);
  for (std::size_t i = 0; i < kBlocks; ++i) {
    const std::string p = "block" + std::to_string(i + 1) + ".";
    Block& b = blocks_[i];
    b.ln1_g = fill(p + "ln1.g", d, 1.0);
    b.ln1_b = fill(p + "ln1.b", d, 0.0);
    b.ln2_g = fill(p + "ln2.g", d, 1.0);
    b.ln2_b = fill(p + "ln2.b", d, 0.0);
    const char* names[4] = {"q", "k", "v", "o"};
    for (std::size_t k = 0; k < 4; ++k) {
      b.attn[2 * k] = weight(p + "attn." + names[k] + ".w", d, d);
      b.attn[2 * k + 1] = fill(p + "attn." + names[k] + ".b", d, 0.0);
    }
    b.ff1 = linear(p + "ff1", d, cfg.ffn);
    b.ff2 = linear(p + "ff2", cfg.ffn, d);
  }
  out_ln_g_ = fill("out.ln.g", d, 1.0);
  out_ln_b_ = fill("out.ln.b", d, 0.0);
  head_ = linear("head", d, 2);
}

Var Denoiser::apply(Graph& g, const Linear& l, Var x) const {
  return grad::linear(x, g.parameter(*l.w), g.parameter(*l.b));
}

DenoiserOutput Denoiser::forward(Graph& g, Var x_t, std::span<const int> steps, const feat::FeatureGroup& feat) const {
  const std::size_t d = cfg_.width;
  const std::size_t B = steps.size();
  if (x_t.value().size() != B * diff::kActionDim) throw ShapeMismatch("x_t must hold 16 values per step entry");
  if (feat.batch != B) throw ShapeMismatch("feature batch does not match x_t");

  Var x = grad::reshape(x_t, {B, diff::kActionDim});
  Var h = grad::reshape(apply(g, in_proj_, x), {B * kTokens, d});
  h = grad::add_tiled(h, g.parameter(*pos_));
  Var temb = g.constant(timestep_embedding(steps, d));
  temb = apply(g, time2_, grad::gelu(apply(g, time1_, temb)));
  h = grad::add(h, grad::repeat_rows(temb, kTokens));

  const Var sources[kBlocks] = {feat.scene_tokens, feat.emb_action, feat.emb_ego};
  Var m_inner;
  for (std::size_t i = 0; i < kBlocks; ++i) {
    const Block& b = blocks_[i];
    grad::AttentionWeights w{g.parameter(*b.attn[0]), g.parameter(*b.attn[1]), g.parameter(*b.attn[2]),
                             g.parameter(*b.attn[3]), g.parameter(*b.attn[4]), g.parameter(*b.attn[5]),
                             g.parameter(*b.attn[6]), g.parameter(*b.attn[7])};
    Var q = grad::layer_norm(h, g.parameter(*b.ln1_g), g.parameter(*b.ln1_b));
    h = grad::add(h, grad::multi_head_cross_attention(q, sources[i], w, B, cfg_.heads));
    Var f = grad::layer_norm(h, g.parameter(*b.ln2_g), g.parameter(*b.ln2_b));
    h = grad::add(h, apply(g, b.ff2, grad::gelu(apply(g, b.ff1, f))));
    if (i == 1) m_inner = grad::group_mean(h, kTokens);
  }
  Var m_outer = grad::group_mean(h, kTokens);

  Var out = grad::layer_norm(h, g.parameter(*out_ln_g_), g.parameter(*out_ln_b_));
  Var eps = grad::reshape(apply(g, head_, out), {B, diff::kActionDim});
  return {eps, m_outer, m_inner};
}

diff::Prediction Denoiser::predict(Graph& g, Var x_t, std::span<const int> steps, const feat::FeatureGroup& feat,
                                   DecorrTap tap) const {
  const DenoiserOutput out = forward(g, x_t, steps, feat);
  return {out.eps_hat, out.representation(tap)};
}

}  // namespace diffplan::den
