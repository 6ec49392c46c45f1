#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "diffplan/autograd.hpp"
#include "diffplan/rng.hpp"
#include "diffplan/trajspace.hpp"

namespace diffplan::diff {

inline constexpr std::size_t kActionDim = 2 * traj::kHorizon;

/// Per-step tables. Index t - 1 holds step t, t = 1..T.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;

  double beta_at(int t) const { return beta[static_cast<std::size_t>(t - 1)]; }
  double alpha_at(int t) const { return alpha[static_cast<std::size_t>(t - 1)]; }
  double alpha_bar_at(int t) const { return alpha_bar[static_cast<std::size_t>(t - 1)]; }
  double sigma_at(int t) const { return sigma[static_cast<std::size_t>(t - 1)]; }
};

/// The linear 1e-4 .. 0.02 schedule over 1000 steps, respaced to T levels:
/// alpha_bar_t equals the reference alpha_bar at step round(t * 1000 / T) and
/// beta_t = 1 - alpha_bar_t / alpha_bar_{t-1} (clipped to 0.999). Throws
/// InvalidSchedule unless 1 <= T <= 1000.
NoiseSchedule build_schedule(int T);

/// x_t for one noise level. Works elementwise on any shape.
struct NoisyActions {
  grad::Tensor values;
  int t = 0;
};

NoisyActions add_noise(const grad::Tensor& x0, const grad::Tensor& eps, int t, const NoiseSchedule& sched);
/// Row r of x0 (B x 16) noised to level steps[r].
grad::Tensor add_noise_rows(const grad::Tensor& x0, const grad::Tensor& eps, std::span<const int> steps,
                            const NoiseSchedule& sched);

/// x_{t-1} from x_t; z is ignored at t = 1.
NoisyActions reverse_step(const NoisyActions& x_t, const grad::Tensor& eps_hat, const grad::Tensor& z,
                          const NoiseSchedule& sched);

/// Per-entry standardisation of the 16 action coordinates.
struct ActionNormalizer {
  std::array<double, kActionDim> mean{};
  std::array<double, kActionDim> std{};

  static ActionNormalizer identity();
  /// Statistics over the labels; each std is floored at `min_std`.
  static ActionNormalizer fit(std::span<const traj::ActionSequence> labels, double min_std = 1e-2);

  std::array<double, kActionDim> normalize(const traj::ActionSequence& a) const;
  traj::ActionSequence denormalize(std::span<const double> x) const;
};

/// What the noise predictor returns: eps_hat (B x 16) and the batch
/// representation handed to the decorrelation loss.
struct Prediction {
  grad::Var eps_hat;
  grad::Var representation;
};

/// eps_theta(x_t, t, feat) with the conditioning bound in.
using NoisePredictor = std::function<Prediction(grad::Graph&, grad::Var x_t, std::span<const int> steps)>;

struct DiffLoss {
  grad::Var loss;
  grad::Var representation;
  std::vector<int> steps;
  grad::Tensor noise;
};

/// Training objective on normalised action labels (B x 16): gaussian noise,
/// a uniform step in [1, T] per sample, MSE between predicted and true noise.
DiffLoss diff_loss(grad::Graph& g, const grad::Tensor& labels, const NoisePredictor& predict,
                   const NoiseSchedule& sched, Rng& rng);
/// Same objective with the noise and steps supplied (validation, tests).
DiffLoss diff_loss(grad::Graph& g, const grad::Tensor& labels, const NoisePredictor& predict,
                   const NoiseSchedule& sched, const grad::Tensor& noise, std::span<const int> steps);

/// N chains from standard normal noise down to x_0, all candidates in one
/// batch. Chain i draws from its own stream seeded by derive_seed(seed, {i}).
/// Returns N x 16 in normalised action units.
grad::Tensor sample_candidates(const NoisePredictor& predict, std::size_t n, const NoiseSchedule& sched,
                               std::uint64_t seed);

}  // namespace diffplan::diff
