#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diffplan/autograd.hpp"
#include "diffplan/rng.hpp"

namespace diffplan::grad {

/// Named parameters plus optimizer state. Iteration order is the sorted name
/// order, which fixes the checkpoint layout and every reduction order.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::map<std::string, Parameter>& all() { return params_; }
  const std::map<std::string, Parameter>& all() const { return params_; }

  void zero_grad();
  std::size_t parameter_count() const;
  double grad_norm() const;

  /// Adam step counter (number of updates applied so far).
  std::int64_t step = 0;

 private:
  std::map<std::string, Parameter> params_;
};

/// Normal(0, std) initialiser.
Tensor random_normal(Shape shape, double std, Rng& rng);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update of every parameter from its accumulated gradient.
void adam_step(ParamStore& params, double lr, const AdamConfig& cfg = {});

/// Linear warmup over the first 30% of steps from max_lr/25 to max_lr, then
/// cosine decay to max_lr/1e4 at step == total_steps.
double onecycle_lr(std::int64_t step, std::int64_t total_steps, double max_lr);

// ---- checkpoint container ----------------------------------------------------
//
// Little-endian byte layout:
//   magic   "DPCK" (4 bytes)
//   version u32 (currently 1)
//   count   u32 number of tensors
//   per tensor:
//     name_len u32, name bytes (UTF-8, no terminator)
//     rank     u32, dims u64 x rank
//     values   f64 x prod(dims)

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::map<std::string, Tensor>;

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::filesystem::path& path);

/// Parameters under "<prefix><name>"; with optimizer state under
/// "adam.m/<prefix><name>", "adam.v/<prefix><name>" and "adam.step".
void export_params(const ParamStore& params, const std::string& prefix, NamedTensors& out, bool with_optimizer);
/// Restores values (and optimizer state when present). Throws IoError on a missing or mis-shaped entry.
void import_params(ParamStore& params, const std::string& prefix, const NamedTensors& in);

}  // namespace diffplan::grad
