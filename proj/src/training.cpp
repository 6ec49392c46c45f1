#include "diffplan/training.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "diffplan/decorr.hpp"
#include "diffplan/error.hpp"

namespace diffplan::app {

using grad::Graph;
using grad::Tensor;
using grad::Var;

ModelConfig model_config(const RunConfig& cfg) {
  ModelConfig m;
  m.encoder.width = cfg.width;
  m.encoder.hidden = cfg.width;
  m.denoiser.width = cfg.width;
  m.denoiser.heads = cfg.heads;
  m.denoiser.ffn = cfg.ffn;
  m.T = cfg.T;
  return m;
}

namespace {

// Cached encoder inputs and labels for a split; batches gather rows from here.
struct SplitCache {
  feat::EncoderInputs inputs;
  Tensor labels;
  std::size_t size = 0;
};

SplitCache build_cache(const std::vector<sim::EpisodeRecord>& episodes, const diff::ActionNormalizer& norm) {
  std::vector<const sim::EpisodeRecord*> ptrs;
  for (const auto& e : episodes) ptrs.push_back(&e);
  return {feat::make_inputs(ptrs), label_rows(ptrs, norm), episodes.size()};
}

void gather_rows(const Tensor& src, std::size_t rows_per_item, std::span<const std::size_t> idx, Tensor& dst) {
  const std::size_t width = rows_per_item * src.cols();
  dst = Tensor({idx.size() * rows_per_item, src.cols()});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto from = src.data().subspan(idx[b] * width, width);
    std::copy(from.begin(), from.end(), dst.data().begin() + static_cast<std::ptrdiff_t>(b * width));
  }
}

struct Batch {
  feat::EncoderInputs inputs;
  Tensor labels;
};

Batch gather(const SplitCache& c, std::span<const std::size_t> idx) {
  Batch b;
  b.inputs.batch = idx.size();
  gather_rows(c.inputs.patches, feat::kSceneTokens, idx, b.inputs.patches);
  gather_rows(c.inputs.history, 1, idx, b.inputs.history);
  gather_rows(c.inputs.ego, 1, idx, b.inputs.ego);
  gather_rows(c.labels, 1, idx, b.labels);
  return b;
}

den::DecorrTap tap_of(Placement p) { return p == Placement::kInner ? den::DecorrTap::kInner : den::DecorrTap::kOuter; }

struct ValidationResult {
  double l_diff = 0.0;
  double mean_abs_corr = 0.0;
  std::vector<double> spectrum;
};

// Fixed noise and steps drawn once per run, so epochs are comparable.
struct ValidationPlan {
  Tensor noise;
  std::vector<int> steps;
};

ValidationPlan make_validation_plan(std::size_t n, const diff::NoiseSchedule& sched, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x7a1d}));
  ValidationPlan p{Tensor({n, diff::kActionDim}), std::vector<int>(n)};
  for (double& v : p.noise.data()) v = rng.normal();
  for (int& t : p.steps) t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.T)));
  return p;
}

ValidationResult validate(const Planner& planner, const SplitCache& val, const ValidationPlan& plan,
                          std::size_t batch, den::DecorrTap tap) {
  ValidationResult r;
  const std::size_t d = planner.config().denoiser.width;
  Tensor reps({val.size, d});
  double sq_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < val.size; start += batch) {
    const std::size_t end = std::min(val.size, start + batch);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Batch b = gather(val, idx);
    Tensor noise;
    gather_rows(plan.noise, 1, idx, noise);
    const std::span<const int> steps(plan.steps.data() + start, end - start);

    Graph g(false);
    const feat::FeatureGroup f = planner.encoder().encode(g, b.inputs);
    const diff::NoisePredictor predict = [&](Graph& gg, Var x, std::span<const int> s) {
      return planner.denoiser().predict(gg, x, s, f, tap);
    };
    const diff::DiffLoss dl = diff::diff_loss(g, b.labels, predict, planner.schedule(), noise, steps);
    sq_sum += dl.loss.value().item() * static_cast<double>(noise.size());
    const Tensor& m = dl.representation.value();
    std::copy(m.data().begin(), m.data().end(), reps.data().begin() + static_cast<std::ptrdiff_t>(start * d));
  }
  r.l_diff = sq_sum / static_cast<double>(val.size * diff::kActionDim);
  if (val.size >= 2) {
    r.mean_abs_corr = decorr::mean_abs_offdiag_correlation(reps);
    r.spectrum = decorr::singular_spectrum(decorr::corr_matrix(reps), std::min(kSpectrumLength, d));
  }
  return r;
}

std::string format_row(const EpochLog& e) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  os << e.epoch << ',' << num(e.l_diff) << ',' << num(e.l_rep) << ',' << num(e.val_l_diff) << ',' << num(e.lr) << ','
     << num(e.mean_abs_corr);
  for (double s : e.spectrum) os << ',' << num(s);
  return os.str();
}

std::string log_header() {
  std::string h = "epoch,l_diff,l_rep,val_l_diff,lr,mean_abs_corr";
  for (std::size_t i = 1; i <= kSpectrumLength; ++i) h += ",sv" + std::to_string(i);
  return h;
}

void write_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << log_header() << '\n';
  for (const auto& e : log) os << format_row(e) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
}

}  // namespace

std::vector<EpochLog> read_train_log(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<EpochLog> out;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() < 6) throw IoError("malformed row in " + path.string());
    EpochLog e{static_cast<std::size_t>(v[0]), v[1], v[2], v[3], v[4], v[5], {v.begin() + 6, v.end()}};
    out.push_back(std::move(e));
  }
  return out;
}

TrainResult train(const RunConfig& cfg, const Splits& splits, bool resume, std::size_t stop_after,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (splits.train.size() < cfg.batch) {
    throw ConfigError("training split has " + std::to_string(splits.train.size()) + " episodes, fewer than batch " +
                      std::to_string(cfg.batch));
  }
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw IoError("cannot create " + cfg.out.string() + ": " + ec.message());
  write_text(cfg.out / "config.txt", cfg.serialize());

  Planner planner(model_config(cfg), derive_seed(cfg.seed, {0x1417}));
  std::vector<traj::ActionSequence> actions;
  for (const auto& e : splits.train) actions.push_back(traj::to_actions(e.expert));
  planner.normalizer = diff::ActionNormalizer::fit(actions);

  TrainResult result;
  result.best_val = std::numeric_limits<double>::infinity();
  std::size_t first_epoch = 1;
  const auto last_path = cfg.out / "last.ckpt";
  const auto best_path = cfg.out / "best.ckpt";
  const auto log_path = cfg.out / "train_log.csv";
  if (resume) {
    const grad::NamedTensors state = grad::load_tensors(last_path);
    planner = Planner::import_from(state);
    auto item = [&](const std::string& key) {
      auto it = state.find(key);
      if (it == state.end()) throw IoError(last_path.string() + " has no " + key);
      return it->second.item();
    };
    first_epoch = static_cast<std::size_t>(item("train/epoch")) + 1;
    result.best_epoch = static_cast<std::size_t>(item("train/best_epoch"));
    result.best_val = item("train/best_val");
    result.log = read_train_log(log_path);
    result.log.resize(std::min(result.log.size(), first_epoch - 1));
  }

  const SplitCache train_cache = build_cache(splits.train, planner.normalizer);
  const SplitCache val_cache = build_cache(splits.val, planner.normalizer);
  const ValidationPlan val_plan = make_validation_plan(val_cache.size, planner.schedule(), cfg.seed);
  const den::DecorrTap tap = tap_of(cfg.placement);
  const bool use_decorr = cfg.placement != Placement::kOff && cfg.beta > 0.0;

  const std::size_t steps_per_epoch = splits.train.size() / cfg.batch;
  const auto total_steps = static_cast<std::int64_t>(steps_per_epoch * cfg.epochs);
  const std::size_t last_epoch = stop_after > 0 ? std::min(cfg.epochs, stop_after) : cfg.epochs;

  std::vector<std::size_t> order(train_cache.size);
  for (std::size_t epoch = first_epoch; epoch <= last_epoch; ++epoch) {
    Rng rng(derive_seed(cfg.seed, {0xe90c, epoch}));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochLog row;
    row.epoch = epoch;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const Batch b = gather(train_cache, std::span(order).subspan(s * cfg.batch, cfg.batch));
      Graph g;
      const feat::FeatureGroup f = planner.encoder().encode(g, b.inputs);
      const diff::NoisePredictor predict = [&](Graph& gg, Var x, std::span<const int> steps) {
        return planner.denoiser().predict(gg, x, steps, f, tap);
      };
      const diff::DiffLoss dl = diff::diff_loss(g, b.labels, predict, planner.schedule(), rng);
      const Var l_rep = decorr::decorr_loss(dl.representation);
      const Var total = use_decorr ? decorr::combined_loss(dl.loss, l_rep, cfg.beta) : dl.loss;
      if (!total.value().all_finite()) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(s));
      }
      g.backward(total);
      row.lr = grad::onecycle_lr(planner.params().step, total_steps, cfg.max_lr);
      grad::adam_step(planner.params(), row.lr);
      planner.params().zero_grad();
      row.l_diff += dl.loss.value().item();
      row.l_rep += l_rep.value().item();
    }
    row.l_diff /= static_cast<double>(steps_per_epoch);
    row.l_rep /= static_cast<double>(steps_per_epoch);

    const ValidationResult v = validate(planner, val_cache, val_plan, cfg.batch, tap);
    row.val_l_diff = v.l_diff;
    row.mean_abs_corr = v.mean_abs_corr;
    row.spectrum = v.spectrum;
    result.log.push_back(row);

    if (row.val_l_diff < result.best_val) {
      result.best_val = row.val_l_diff;
      result.best_epoch = epoch;
      planner.save(best_path);
    }
    grad::NamedTensors state;
    planner.export_to(state, true);
    state["train/epoch"] = Tensor::scalar(static_cast<double>(epoch));
    state["train/best_epoch"] = Tensor::scalar(static_cast<double>(result.best_epoch));
    state["train/best_val"] = Tensor::scalar(result.best_val);
    grad::save_tensors(last_path, state);
    write_log(log_path, result.log);
    if (on_epoch) on_epoch(row);
  }
  return result;
}

}  // namespace diffplan::app
