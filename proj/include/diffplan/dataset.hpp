#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "diffplan/scenesim.hpp"

namespace diffplan::app {

/// One JSON object per line.
std::string episode_to_json(const sim::EpisodeRecord& e);
sim::EpisodeRecord episode_from_json(const std::string& line);

void write_jsonl(const std::filesystem::path& path, const std::vector<sim::EpisodeRecord>& episodes);
std::vector<sim::EpisodeRecord> read_jsonl(const std::filesystem::path& path);

struct Splits {
  std::vector<sim::EpisodeRecord> train, val, test;
};

/// Episodes 0 .. n-1 of make_dataset(n, seed): the first 80% train, the next 10% val, the rest test.
Splits generate_splits(std::size_t n, std::uint64_t seed);
void write_splits(const std::filesystem::path& dir, const Splits& splits);
Splits read_splits(const std::filesystem::path& dir);

}  // namespace diffplan::app
