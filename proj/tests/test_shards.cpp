#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "fixture.hpp"
#include "geoforge/error.hpp"
#include "geoforge/shards.hpp"

using namespace geoforge;

namespace {

std::vector<InstructionRecord> records_for(std::size_t images, std::size_t per_image) {
  std::vector<InstructionRecord> out;
  for (std::size_t i = 0; i < images; ++i) {
    for (std::size_t q = 0; q < per_image; ++q) {
      InstructionRecord r;
      r.image_id = "img" + std::to_string(i);
      r.image = r.image_id + ".png";
      r.id = r.image_id + "_vqa_" + std::to_string(q);
      r.task = q % 2 ? InstructionTask::Vqa : InstructionTask::Classification;
      r.conversations = {{Speaker::Human, with_image("q")}, {Speaker::Assistant, "a"}};
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace

TEST(Split, NinetyTenByImage) {
  const auto recs = records_for(100, 3);
  const ShardReport r = split_by_image(recs, 7, 0.9);
  EXPECT_EQ(r.train_images.size(), 90u);
  EXPECT_EQ(r.test_images.size(), 10u);
  EXPECT_EQ(r.train_records, 270u);
  EXPECT_EQ(r.test_records, 30u);
  EXPECT_TRUE(std::is_sorted(r.train_images.begin(), r.train_images.end()));
}

TEST(Split, DisjointAndCompleteAcrossSeeds) {
  const auto recs = records_for(37, 2);
  std::set<std::vector<std::string>> distinct;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ShardReport r = split_by_image(recs, seed, 0.8);
    std::set<std::string> train(r.train_images.begin(), r.train_images.end());
    for (const auto& t : r.test_images) EXPECT_FALSE(train.count(t));
    EXPECT_EQ(r.train_images.size() + r.test_images.size(), 37u);
    EXPECT_EQ(r.train_images.size(), 30u);  // round(0.8 * 37) = 30
    distinct.insert(r.test_images);
    const ShardReport again = split_by_image(recs, seed, 0.8);
    EXPECT_EQ(again.test_images, r.test_images);
  }
  EXPECT_GT(distinct.size(), 15u);
}

TEST(Split, RejectsBadFraction) {
  const auto recs = records_for(3, 1);
  EXPECT_THROW(split_by_image(recs, 0, 0.0), ValidationError);
  EXPECT_THROW(split_by_image(recs, 0, 1.0), ValidationError);
}

TEST(Emit, WritesShardsAndStats) {
  const auto dir = fixture::temp_dir("shards");
  const auto recs = records_for(20, 4);
  ShardOptions opts{dir, 3, 0.75, "abc"};
  const ShardReport r = emit_shards(recs, opts, {{"note", 1}});

  const auto train = read_shard(dir / "train.jsonl");
  const auto test = read_shard(dir / "test.jsonl");
  EXPECT_EQ(train.size(), r.train_records);
  EXPECT_EQ(test.size(), r.test_records);
  EXPECT_EQ(train.size() + test.size(), recs.size());

  std::set<std::string> train_images;
  for (const auto& t : train) train_images.insert(t.image);
  for (const auto& t : test) EXPECT_FALSE(train_images.count(t.image));

  // input order is kept within a shard
  std::vector<std::string> ids;
  for (const auto& t : train) ids.push_back(t.id);
  std::vector<std::string> expected;
  for (const auto& rec : recs) {
    if (std::binary_search(r.train_images.begin(), r.train_images.end(), rec.image_id)) expected.push_back(rec.id);
  }
  EXPECT_EQ(ids, expected);

  const auto stats = nlohmann::json::parse(fixture::slurp(dir / "stats.json"));
  EXPECT_EQ(stats["config_hash"], "abc");
  EXPECT_EQ(stats["seed"], 3);
  EXPECT_EQ(stats["records"]["total"], recs.size());
  EXPECT_EQ(stats["note"], 1);
  std::size_t sum = 0;
  for (const auto& [task, counts] : stats["tasks"].items()) {
    EXPECT_EQ(counts["train"].get<std::size_t>() + counts["test"].get<std::size_t>(), counts["total"].get<std::size_t>());
    sum += counts["total"].get<std::size_t>();
  }
  EXPECT_EQ(sum, recs.size());

  const std::string first = fixture::slurp(dir / "train.jsonl");
  emit_shards(recs, opts, {{"note", 1}});
  EXPECT_EQ(fixture::slurp(dir / "train.jsonl"), first);
  std::filesystem::remove_all(dir);
}

TEST(ReadShard, ReportsLineNumbers) {
  const auto dir = fixture::temp_dir("readshard");
  {
    std::ofstream out(dir / "bad.jsonl");
    out << nlohmann::json(to_json(records_for(1, 1)[0])).dump() << "\n{\"id\": \n";
  }
  try {
    read_shard(dir / "bad.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  {
    std::ofstream out(dir / "invalid.jsonl");
    out << R"({"id": "x", "image": "x", "task": "vqa", "conversations": []})" << "\n";
  }
  try {
    read_shard(dir / "invalid.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  std::filesystem::remove_all(dir);
}
