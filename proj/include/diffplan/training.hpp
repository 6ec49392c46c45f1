#pragma once

#include <functional>
#include <vector>

#include "diffplan/config.hpp"
#include "diffplan/dataset.hpp"
#include "diffplan/planner.hpp"

namespace diffplan::app {

inline constexpr std::size_t kSpectrumLength = 16;

struct EpochLog {
  std::size_t epoch = 0;
  double l_diff = 0.0;      // mean over the epoch's steps
  double l_rep = 0.0;       // mean over the epoch's steps (logged even when beta = 0)
  double val_l_diff = 0.0;  // fixed noise and steps
  double lr = 0.0;          // at the last step of the epoch
  double mean_abs_corr = 0.0;
  std::vector<double> spectrum;  // top singular values of the validation corr matrix
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
};

ModelConfig model_config(const RunConfig& cfg);

/// Trains on splits.train, validates on splits.val. Writes config.txt,
/// train_log.csv, last.ckpt (with optimizer state) and best.ckpt under cfg.out.
/// With `resume`, continues from last.ckpt. `stop_after` > 0 ends the run after
/// that many epochs in total without changing the schedule.
TrainResult train(const RunConfig& cfg, const Splits& splits, bool resume = false, std::size_t stop_after = 0,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

std::vector<EpochLog> read_train_log(const std::filesystem::path& path);

}  // namespace diffplan::app
