#include "diffplan/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffplan/error.hpp"

namespace diffplan::diff {

using grad::Graph;
using grad::Tensor;
using grad::Var;

NoiseSchedule build_schedule(int T) {
  constexpr int kReference = 1000;
  if (T < 1 || T > kReference) {
    throw InvalidSchedule("diffusion step count must be in [1, 1000], got " + std::to_string(T));
  }
  // Cumulative products of the linear 1e-4 .. 0.02 reference schedule.
  std::vector<double> ref_bar(kReference + 1, 1.0);
  for (int k = 1; k <= kReference; ++k) {
    const double b = 1e-4 + (0.02 - 1e-4) * static_cast<double>(k - 1) / (kReference - 1);
    ref_bar[static_cast<std::size_t>(k)] = ref_bar[static_cast<std::size_t>(k - 1)] * (1.0 - b);
  }
  NoiseSchedule s;
  s.T = T;
  double prev_ref = 1.0;
  double bar = 1.0;
  for (int t = 1; t <= T; ++t) {
    const auto k = static_cast<std::size_t>((static_cast<long>(t) * kReference + T / 2) / T);
    const double b = std::min(1.0 - ref_bar[k] / prev_ref, 0.999);
    prev_ref = ref_bar[k];
    s.beta.push_back(b);
    s.alpha.push_back(1.0 - b);
    bar *= 1.0 - b;
    s.alpha_bar.push_back(bar);
    s.sigma.push_back(std::sqrt(b));
  }
  return s;
}

namespace {

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T) {
    throw InvalidSchedule("step " + std::to_string(t) + " outside [1, " + std::to_string(sched.T) + "]");
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(what) + ": " + grad::shape_string(a.shape()) + " vs " +
                        grad::shape_string(b.shape()));
  }
}

}  // namespace

NoisyActions add_noise(const Tensor& x0, const Tensor& eps, int t, const NoiseSchedule& sched) {
  check_step(t, sched);
  check_same_shape(x0, eps, "add_noise");
  const double a = std::sqrt(sched.alpha_bar_at(t));
  const double b = std::sqrt(1.0 - sched.alpha_bar_at(t));
  NoisyActions out{Tensor(x0.shape()), t};
  for (std::size_t i = 0; i < x0.size(); ++i) out.values[i] = a * x0[i] + b * eps[i];
  return out;
}

Tensor add_noise_rows(const Tensor& x0, const Tensor& eps, std::span<const int> steps, const NoiseSchedule& sched) {
  check_same_shape(x0, eps, "add_noise_rows");
  if (steps.size() != x0.rows()) throw ShapeMismatch("one step per row required");
  Tensor out(x0.shape());
  for (std::size_t r = 0; r < x0.rows(); ++r) {
    check_step(steps[r], sched);
    const double a = std::sqrt(sched.alpha_bar_at(steps[r]));
    const double b = std::sqrt(1.0 - sched.alpha_bar_at(steps[r]));
    for (std::size_t c = 0; c < x0.cols(); ++c) out.at(r, c) = a * x0.at(r, c) + b * eps.at(r, c);
  }
  return out;
}

NoisyActions reverse_step(const NoisyActions& x_t, const Tensor& eps_hat, const Tensor& z, const NoiseSchedule& sched) {
  const int t = x_t.t;
  check_step(t, sched);
  check_same_shape(x_t.values, eps_hat, "reverse_step");
  if (t > 1) check_same_shape(x_t.values, z, "reverse_step noise");
  const double alpha = sched.alpha_at(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  const double eps_coef = (1.0 - alpha) / std::sqrt(1.0 - sched.alpha_bar_at(t));
  const double sigma = t > 1 ? sched.sigma_at(t) : 0.0;
  NoisyActions out{Tensor(x_t.values.shape()), t - 1};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = inv_sqrt_alpha * (x_t.values[i] - eps_coef * eps_hat[i]);
    if (t > 1) out.values[i] += sigma * z[i];
  }
  return out;
}

ActionNormalizer ActionNormalizer::identity() {
  ActionNormalizer n;
  n.std.fill(1.0);
  return n;
}

ActionNormalizer ActionNormalizer::fit(std::span<const traj::ActionSequence> labels, double min_std) {
  ActionNormalizer n;
  if (labels.empty()) return identity();
  const double count = static_cast<double>(labels.size());
  std::array<double, kActionDim> sum{};
  for (const auto& a : labels) {
    for (std::size_t k = 0; k < traj::kHorizon; ++k) {
      sum[2 * k] += a.actions[k].x;
      sum[2 * k + 1] += a.actions[k].y;
    }
  }
  for (std::size_t i = 0; i < kActionDim; ++i) n.mean[i] = sum[i] / count;
  std::array<double, kActionDim> sq{};
  for (const auto& a : labels) {
    for (std::size_t k = 0; k < traj::kHorizon; ++k) {
      const double dx = a.actions[k].x - n.mean[2 * k];
      const double dy = a.actions[k].y - n.mean[2 * k + 1];
      sq[2 * k] += dx * dx;
      sq[2 * k + 1] += dy * dy;
    }
  }
  for (std::size_t i = 0; i < kActionDim; ++i) n.std[i] = std::max(std::sqrt(sq[i] / count), min_std);
  return n;
}

std::array<double, kActionDim> ActionNormalizer::normalize(const traj::ActionSequence& a) const {
  std::array<double, kActionDim> x{};
  for (std::size_t k = 0; k < traj::kHorizon; ++k) {
    x[2 * k] = (a.actions[k].x - mean[2 * k]) / std[2 * k];
    x[2 * k + 1] = (a.actions[k].y - mean[2 * k + 1]) / std[2 * k + 1];
  }
  return x;
}

traj::ActionSequence ActionNormalizer::denormalize(std::span<const double> x) const {
  if (x.size() != kActionDim) throw ShapeMismatch("normalised action row must have 16 entries");
  traj::ActionSequence a;
  for (std::size_t k = 0; k < traj::kHorizon; ++k) {
    a.actions[k] = {x[2 * k] * std[2 * k] + mean[2 * k], x[2 * k + 1] * std[2 * k + 1] + mean[2 * k + 1]};
  }
  return a;
}

DiffLoss diff_loss(Graph& g, const Tensor& labels, const NoisePredictor& predict, const NoiseSchedule& sched,
                   Rng& rng) {
  Tensor noise(labels.shape());
  for (double& v : noise.data()) v = rng.normal();
  std::vector<int> steps(labels.rows());
  for (int& t : steps) t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.T)));
  return diff_loss(g, labels, predict, sched, noise, steps);
}

DiffLoss diff_loss(Graph& g, const Tensor& labels, const NoisePredictor& predict, const NoiseSchedule& sched,
                   const Tensor& noise, std::span<const int> steps) {
  const Tensor x_t = add_noise_rows(labels, noise, steps, sched);
  const Prediction pred = predict(g, g.constant(x_t), steps);
  if (pred.eps_hat.value().size() != noise.size()) throw ShapeMismatch("noise prediction has the wrong size");
  Var target = g.constant(noise.reshaped(pred.eps_hat.shape()));
  return {grad::mse(pred.eps_hat, target), pred.representation, std::vector<int>(steps.begin(), steps.end()), noise};
}

Tensor sample_candidates(const NoisePredictor& predict, std::size_t n, const NoiseSchedule& sched, std::uint64_t seed) {
  std::vector<Rng> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(derive_seed(seed, {i}));

  NoisyActions x{Tensor({n, kActionDim}), sched.T};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kActionDim; ++c) x.values.at(i, c) = streams[i].normal();
  }
  Tensor z({n, kActionDim});
  std::vector<int> steps(n);
  while (x.t >= 1) {
    std::fill(steps.begin(), steps.end(), x.t);
    Tensor eps_hat;
    {
      Graph g(false);
      eps_hat = predict(g, g.constant(x.values), steps).eps_hat.value().reshaped({n, kActionDim});
    }
    if (x.t > 1) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < kActionDim; ++c) z.at(i, c) = streams[i].normal();
      }
    }
    x = reverse_step(x, eps_hat, z, sched);
  }
  return x.values;
}

}  // namespace diffplan::diff
