#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace diffplan::app {

enum class Placement { kOuter, kInner, kOff };

std::string_view to_string(Placement p);

/// Flat key = value settings shared by every command.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path data = "data";  // directory holding train/val/test.jsonl
  std::filesystem::path out = "runs/default";
  std::size_t episodes = 2000;

  int T = 10;
  std::size_t batch = 64;
  double beta = 0.02;
  std::size_t candidates = 30;
  // 120 passes over the 1,600-episode training split: 3,000 steps at B = 64.
  std::size_t epochs = 120;
  double max_lr = 1e-4;
  Placement placement = Placement::kOuter;

  std::size_t width = 128;
  std::size_t heads = 4;
  std::size_t ffn = 256;

  std::size_t eval_limit = 0;  // 0 evaluates the whole test split
  bool post_filter_diversity = false;

  /// Sets one key from its text form. Throws ConfigError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Throws ConfigError when a value is out of range.
  void validate() const;

  /// One "key = value" line per field; doubles use 17 significant digits.
  std::string serialize() const;
  /// Applies the lines of `text` on top of `base`.
  static RunConfig parse(std::string_view text, RunConfig base);
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path, RunConfig base);
  static RunConfig load(const std::filesystem::path& path);

  static const std::vector<std::string>& keys();

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace diffplan::app
