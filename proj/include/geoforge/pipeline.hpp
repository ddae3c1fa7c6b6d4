#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoforge/attributes.hpp"
#include "geoforge/chat.hpp"
#include "geoforge/instruction.hpp"
#include "geoforge/shards.hpp"

namespace geoforge {

struct ChatSettings {
  HttpChatSettings http;
  std::string api_key_env = "GEOFORGE_CHAT_API_KEY";
  int max_in_flight = 4;
  int attempts = 3;
  int backoff_ms = 500;
};

// Generation settings. Relative paths in the config file resolve against the
// directory holding the file.
struct ForgeConfig {
  std::filesystem::path base_dir;
  std::vector<std::filesystem::path> manifests;
  std::vector<std::filesystem::path> pseudo_manifests;
  std::optional<std::filesystem::path> class_registry;
  std::optional<std::filesystem::path> raster_root;  // no colours without it
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  double split = 0.9;
  double pseudo_iou = 0.5;
  double relation_distance = 0.1;
  ColorOptions kmeans;
  std::map<InstructionTask, std::size_t> budgets;  // tasks without a budget emit everything
  std::set<InstructionTask> tasks;                 // empty means all tasks
  std::optional<std::filesystem::path> palette;
  std::optional<std::filesystem::path> relations;
  std::map<ConversationKind, std::filesystem::path> prompts;
  std::vector<std::string> classification_classes;
  ChatSettings chat;
  bool offline = false;
  int jobs = 1;

  bool enabled(InstructionTask t) const { return tasks.empty() || tasks.contains(t); }
};

ForgeConfig parse_forge_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ForgeConfig load_forge_config(const std::filesystem::path& path);

// Settings that influence the generated bytes, with paths relative to the
// config directory. Thread count, output location and secrets are excluded.
nlohmann::ordered_json canonical_json(const ForgeConfig& config);
// 16 hex digits of FNV-1a over canonical_json.
std::string config_hash(const ForgeConfig& config);

// Comma-separated task names or aliases.
std::set<InstructionTask> parse_task_list(std::string_view list);

struct TaskCounts {
  std::optional<std::size_t> requested;
  std::size_t available = 0;
  std::size_t emitted = 0;
};

struct PipelineReport {
  std::map<InstructionTask, TaskCounts> tasks;
  ShardReport shards;
  std::size_t benchmark_items = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> chat_failures;
  std::string config_hash;
};

struct GeneratedData {
  Corpus corpus;
  AttributeReport attributes;
  std::vector<InstructionRecord> records;
  PipelineReport report;
};

// Loads, extracts attributes and assembles the records of every enabled task,
// sampled down to the configured budgets. `client` overrides the chat client
// chosen from the config.
GeneratedData generate_records(const ForgeConfig& config, ChatClient* client = nullptr);

// generate_records, then writes train/test shards, stats.json and
// benchmark.jsonl (built from the test split) to config.output_dir.
PipelineReport run_pipeline(const ForgeConfig& config, ChatClient* client = nullptr);

}  // namespace geoforge
