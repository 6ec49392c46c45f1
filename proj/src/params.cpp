#include "diffplan/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "diffplan/error.hpp"

namespace diffplan::grad {

Parameter& ParamStore::add(const std::string& name, Tensor init) {
  auto [it, inserted] = params_.try_emplace(name, std::move(init));
  if (!inserted) throw std::invalid_argument("duplicate parameter " + name);
  return it->second;
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& [_, p] : params_) {
    for (double g : p.grad.data()) s += g * g;
  }
  return std::sqrt(s);
}

Tensor random_normal(Shape shape, double std, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = std * rng.normal();
  return t;
}

void adam_step(ParamStore& params, double lr, const AdamConfig& cfg) {
  ++params.step;
  const double t = static_cast<double>(params.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [_, p] : params.all()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.adam_m[i] = cfg.beta1 * p.adam_m[i] + (1.0 - cfg.beta1) * g;
      p.adam_v[i] = cfg.beta2 * p.adam_v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = p.adam_m[i] / c1;
      const double v_hat = p.adam_v[i] / c2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double onecycle_lr(std::int64_t step, std::int64_t total_steps, double max_lr) {
  const double start = max_lr / 25.0;
  const double floor = max_lr / 1e4;
  if (total_steps <= 0) return start;
  const double s = static_cast<double>(std::clamp<std::int64_t>(step, 0, total_steps));
  const double total = static_cast<double>(total_steps);
  const double warm = 0.3 * total;
  if (s <= warm) return start + (max_lr - start) * (warm > 0.0 ? s / warm : 1.0);
  const double progress = (s - warm) / (total - warm);
  return floor + (max_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

constexpr char kMagic[4] = {'D', 'P', 'C', 'K'};

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

std::uint64_t get_uint(std::istream& is, int bytes, const std::filesystem::path& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), bytes)) throw IoError("truncated checkpoint " + path.string());
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(os, d);
    for (double v : t.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw IoError("failed writing " + path.string());
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a checkpoint: " + path.string());
  const auto version = get_uint(is, 4, path);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  }
  const auto count = get_uint(is, 4, path);
  NamedTensors out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get_uint(is, 4, path);
    std::string name(len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(len))) throw IoError("truncated checkpoint " + path.string());
    const auto rank = get_uint(is, 4, path);
    Shape shape(rank);
    for (auto& d : shape) d = get_uint(is, 8, path);
    std::vector<double> data(shape_size(shape));
    for (double& v : data) v = std::bit_cast<double>(get_uint(is, 8, path));
    out.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

void export_params(const ParamStore& params, const std::string& prefix, NamedTensors& out, bool with_optimizer) {
  for (const auto& [name, p] : params.all()) {
    out[prefix + name] = p.value;
    if (with_optimizer) {
      out["adam.m/" + prefix + name] = p.adam_m;
      out["adam.v/" + prefix + name] = p.adam_v;
    }
  }
  if (with_optimizer) out["adam.step/" + prefix] = Tensor::scalar(static_cast<double>(params.step));
}

void import_params(ParamStore& params, const std::string& prefix, const NamedTensors& in) {
  auto fetch = [&](const std::string& key, const Shape& shape) -> const Tensor* {
    auto it = in.find(key);
    if (it == in.end()) return nullptr;
    if (it->second.shape() != shape) {
      throw IoError("checkpoint entry " + key + " has shape " + shape_string(it->second.shape()) + ", expected " +
                    shape_string(shape));
    }
    return &it->second;
  };
  for (auto& [name, p] : params.all()) {
    const Tensor* v = fetch(prefix + name, p.value.shape());
    if (!v) throw IoError("checkpoint is missing parameter " + prefix + name);
    p.value = *v;
    if (const Tensor* m = fetch("adam.m/" + prefix + name, p.value.shape())) p.adam_m = *m;
    if (const Tensor* s = fetch("adam.v/" + prefix + name, p.value.shape())) p.adam_v = *s;
    p.grad.fill(0.0);
  }
  if (auto it = in.find("adam.step/" + prefix); it != in.end()) {
    params.step = static_cast<std::int64_t>(it->second.item());
  }
}

}  // namespace diffplan::grad
