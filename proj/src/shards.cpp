#include "geoforge/shards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "geoforge/error.hpp"

namespace geoforge {

namespace {

const std::string& image_key(const InstructionRecord& r) {
  return r.image_id.empty() ? r.image : r.image_id;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

ShardReport split_by_image(std::span<const InstructionRecord> records, std::uint64_t seed,
                           double split) {
  if (!(split > 0.0 && split < 1.0)) {
    throw ValidationError("split fraction must lie in (0, 1)", 0, "split");
  }
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(image_key(r));
  std::vector<std::string> order(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(split * static_cast<double>(order.size())));

  ShardReport report;
  report.train_images.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  report.test_images.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(report.train_images.begin(), report.train_images.end());
  std::sort(report.test_images.begin(), report.test_images.end());
  for (const auto& r : records) {
    auto& counts = report.per_task[std::string(to_string(r.task))];
    if (std::binary_search(report.train_images.begin(), report.train_images.end(), image_key(r))) {
      ++report.train_records;
      ++counts.first;
    } else {
      ++report.test_records;
      ++counts.second;
    }
  }
  return report;
}

void write_jsonl(const std::filesystem::path& path, std::span<const InstructionRecord> records) {
  auto out = open_output(path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  check_written(out, path);
}

ShardReport emit_shards(std::span<const InstructionRecord> records, const ShardOptions& options,
                        const nlohmann::ordered_json& extra) {
  ShardReport report = split_by_image(records, options.seed, options.split);
  std::error_code ec;
  std::filesystem::create_directories(options.output_dir, ec);
  if (ec) throw Error("cannot create " + options.output_dir.string() + ": " + ec.message());

  std::vector<InstructionRecord> train, test;
  for (const auto& r : records) {
    const bool in_train =
        std::binary_search(report.train_images.begin(), report.train_images.end(), image_key(r));
    (in_train ? train : test).push_back(r);
  }
  write_jsonl(options.output_dir / "train.jsonl", train);
  write_jsonl(options.output_dir / "test.jsonl", test);

  nlohmann::ordered_json stats;
  stats["config_hash"] = options.config_hash;
  stats["seed"] = options.seed;
  stats["split"] = options.split;
  stats["images"] = {{"train", report.train_images.size()}, {"test", report.test_images.size()}};
  stats["records"] = {{"train", report.train_records},
                      {"test", report.test_records},
                      {"total", report.train_records + report.test_records}};
  auto& tasks = stats["tasks"] = nlohmann::ordered_json::object();
  for (const auto& [task, counts] : report.per_task) {
    tasks[task] = {{"train", counts.first}, {"test", counts.second}, {"total", counts.first + counts.second}};
  }
  for (const auto& [key, value] : extra.items()) stats[key] = value;

  const auto stats_path = options.output_dir / "stats.json";
  auto out = open_output(stats_path);
  out << stats.dump(2) << '\n';
  check_written(out, stats_path);
  return report;
}

std::vector<InstructionRecord> read_shard(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<InstructionRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), n);
    }
    try {
      out.push_back(record_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), n);
    }
  }
  return out;
}

}  // namespace geoforge
