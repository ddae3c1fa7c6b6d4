#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoforge/instruction.hpp"

namespace geoforge {

struct ShardOptions {
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  double split = 0.9;  // fraction of images assigned to train, in (0, 1)
  std::string config_hash;
};

struct ShardReport {
  std::vector<std::string> train_images;  // sorted
  std::vector<std::string> test_images;   // sorted
  std::size_t train_records = 0;
  std::size_t test_records = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_task;  // task -> (train, test)
};

// Assigns whole images to train or test: the sorted image ids are shuffled with
// the seed and the first round(split * n) go to train.
ShardReport split_by_image(std::span<const InstructionRecord> records, std::uint64_t seed,
                           double split);

// Writes train.jsonl, test.jsonl and stats.json. Records keep their input
// order within each shard. `extra` members are merged into stats.json.
ShardReport emit_shards(std::span<const InstructionRecord> records, const ShardOptions& options,
                        const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

// One record per line; throws ParseError / ValidationError with the line number.
std::vector<InstructionRecord> read_shard(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, std::span<const InstructionRecord> records);

}  // namespace geoforge
