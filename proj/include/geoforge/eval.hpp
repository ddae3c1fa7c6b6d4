#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoforge/annotation.hpp"
#include "geoforge/instruction.hpp"

namespace geoforge {

enum class BenchmarkKind : std::uint8_t { Ground, Description, Region, Vqa, Classification };

std::string_view to_string(BenchmarkKind k);
std::optional<BenchmarkKind> parse_benchmark_kind(std::string_view name);

// One evaluation question. Boxes in `answer` are normalized to the image size
// and are scored after denormalizing with width/height.
struct BenchmarkItem {
  std::string id;
  BenchmarkKind kind = BenchmarkKind::Ground;
  std::string image;
  int width = 0;
  int height = 0;
  std::string question;
  std::string answer;
  std::string category;  // question type for VQA, class for classification
};

nlohmann::ordered_json to_json(const BenchmarkItem& item);
BenchmarkItem benchmark_item_from_json(const nlohmann::json& j);

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path);
void write_benchmark(const std::filesystem::path& path, std::span<const BenchmarkItem> items);

// Benchmark questions for every record of a scorable task. Grounded
// descriptions appear twice: as a Description item and as a Ground item.
std::vector<BenchmarkItem> make_benchmark(std::span<const InstructionRecord> records,
                                          const Corpus& corpus);

// Raw model output per question id.
using Predictions = std::unordered_map<std::string, std::string>;

// Lines of {"id": ..., "output": ...}; duplicate ids are an error.
Predictions load_predictions(const std::filesystem::path& path);
Predictions load_predictions(std::istream& in);

// Greedy one-to-one matching: all (pred, gt) pairs by IoU, highest first, ties
// by index; a pair is accepted when IoU >= tau and both sides are unmatched.
std::vector<std::pair<std::size_t, std::size_t>> greedy_match(std::span<const Box> predicted,
                                                              std::span<const Box> truth,
                                                              double tau);

struct Bucket {
  std::size_t matched = 0;
  std::size_t total = 0;

  // NaN when the bucket is empty.
  double percent() const;
  void add(const Bucket& other) {
    matched += other.matched;
    total += other.total;
  }
};

struct ScoringStatus {
  std::size_t questions = 0;
  std::size_t missing = 0;      // no prediction for the id
  std::size_t undecodable = 0;  // prediction yielded no boxes or malformed markup
  std::vector<std::string> warnings;
};

struct GroundingScorecard {
  double tau = 0.5;
  double area_p20 = 0;
  double area_p80 = 0;
  Bucket overall;                          // micro average over GT boxes
  std::map<std::string, Bucket> by_size;   // small, medium, large
  std::map<std::string, Bucket> by_arity;  // single, multi
  std::map<std::string, Bucket> by_task;   // refer, grounding
  ScoringStatus status;

  // Mean of the non-empty size buckets.
  double macro() const;
};

// Ground items only; other kinds are ignored.
GroundingScorecard score_grounding(const Predictions& predictions,
                                   std::span<const BenchmarkItem> truth, double tau);

struct DescriptionScorecard {
  Bucket acc50;
  Bucket acc25;
  double meteor = 0;  // mean over questions, span markup removed from both texts
  ScoringStatus status;
};

DescriptionScorecard score_grounded_description(const Predictions& predictions,
                                                std::span<const BenchmarkItem> truth);

struct TextScorecard {
  double rouge1 = 0;
  double rougeL = 0;
  double meteor = 0;
  ScoringStatus status;
};

// Region items; each metric is the mean over questions.
TextScorecard score_region_captions(const Predictions& predictions,
                                    std::span<const BenchmarkItem> truth);

// Lowercase, trim, strip terminal punctuation, collapse inner whitespace.
std::string normalize_answer(std::string_view text);

// True when `needle` occurs in `haystack` delimited by non-alphanumerics.
bool contains_phrase(std::string_view haystack, std::string_view needle);

// Exact normalized match, or the prediction contains the true class and no
// other class that is not itself part of the true class name. Class names
// are compared with '_' read as a space.
bool classification_correct(std::string_view prediction, std::string_view truth,
                            std::span<const std::string> classes);

enum class ClosedKind : std::uint8_t { VqaYesNo, RuralUrban, Classification };

struct ClosedScorecard {
  std::map<std::string, Bucket> per_category;
  Bucket overall;       // micro
  double mean = 0;      // macro over categories
  std::size_t skipped = 0;  // count/area questions
  ScoringStatus status;
};

// VqaYesNo scores every VQA question except count and area ones, RuralUrban
// only the rural_urban category; both compare normalized answers. When
// `classes` is empty the class list is every distinct true label.
ClosedScorecard score_closed_answers(const Predictions& predictions,
                                     std::span<const BenchmarkItem> truth, ClosedKind kind,
                                     std::vector<std::string> classes = {});

nlohmann::ordered_json to_json(const GroundingScorecard& s);
nlohmann::ordered_json to_json(const DescriptionScorecard& s);
nlohmann::ordered_json to_json(const TextScorecard& s);
nlohmann::ordered_json to_json(const ClosedScorecard& s);

}  // namespace geoforge
