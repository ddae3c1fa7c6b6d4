#include "geoforge/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "geoforge/attributes.hpp"
#include "geoforge/codec.hpp"
#include "geoforge/error.hpp"
#include "geoforge/text_metrics.hpp"

namespace geoforge {

namespace {

constexpr std::array<std::pair<BenchmarkKind, std::string_view>, 5> kKindNames{{
    {BenchmarkKind::Ground, "ground"},
    {BenchmarkKind::Description, "describe"},
    {BenchmarkKind::Region, "region"},
    {BenchmarkKind::Vqa, "vqa"},
    {BenchmarkKind::Classification, "classify"},
}};

nlohmann::json percent_json(const Bucket& b) {
  if (b.total == 0) return nullptr;
  return b.percent();
}

nlohmann::ordered_json bucket_json(const Bucket& b) {
  return {{"matched", b.matched}, {"total", b.total}, {"percent", percent_json(b)}};
}

nlohmann::ordered_json buckets_json(const std::map<std::string, Bucket>& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, b] : m) j[k] = bucket_json(b);
  return j;
}

nlohmann::ordered_json status_json(const ScoringStatus& s) {
  return {{"questions", s.questions},
          {"missing", s.missing},
          {"undecodable", s.undecodable},
          {"warnings", s.warnings}};
}

std::vector<Box> boxes_of(const GroundedResponse& r, int width, int height) {
  std::vector<Box> out;
  for (const auto& t : r.boxes()) out.push_back(denormalize(t, width, height));
  return out;
}

const std::string* find_prediction(const Predictions& p, const BenchmarkItem& item,
                                   ScoringStatus& status) {
  ++status.questions;
  auto it = p.find(item.id);
  if (it == p.end()) {
    ++status.missing;
    return nullptr;
  }
  return &it->second;
}

void finish_status(ScoringStatus& status) {
  if (status.missing) {
    status.warnings.insert(status.warnings.begin(),
                           std::to_string(status.missing) + " of " + std::to_string(status.questions) +
                               " questions have no prediction and count as wrong");
  }
}

// Predicted boxes of one question; counts undecodable outputs.
std::vector<Box> predicted_boxes(const std::string* output, const BenchmarkItem& item,
                                 ScoringStatus& status) {
  if (!output) return {};
  const GroundedResponse r = decode_response(*output);
  auto boxes = boxes_of(r, item.width, item.height);
  if (boxes.empty() || !r.warnings.empty()) {
    ++status.undecodable;
    std::string msg = item.id + ": ";
    msg += boxes.empty() ? "no boxes decoded" : r.warnings.front();
    status.warnings.push_back(std::move(msg));
  }
  return boxes;
}

std::string plain_text(std::string_view s) { return decode_response(s).plain_text; }

std::string class_key(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '_', ' ');
  return normalize_answer(out);
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view to_string(BenchmarkKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::optional<BenchmarkKind> parse_benchmark_kind(std::string_view name) {
  for (const auto& [kind, n] : kKindNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

nlohmann::ordered_json to_json(const BenchmarkItem& item) {
  nlohmann::ordered_json j;
  j["id"] = item.id;
  j["kind"] = std::string(to_string(item.kind));
  j["image"] = item.image;
  j["width"] = item.width;
  j["height"] = item.height;
  j["question"] = item.question;
  j["answer"] = item.answer;
  if (!item.category.empty()) j["category"] = item.category;
  return j;
}

BenchmarkItem benchmark_item_from_json(const nlohmann::json& j) {
  BenchmarkItem item;
  try {
    item.id = j.at("id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    const auto parsed = parse_benchmark_kind(kind);
    if (!parsed) throw ValidationError("unknown kind '" + kind + "'", 0, "kind");
    item.kind = *parsed;
    item.image = j.value("image", "");
    item.width = j.at("width").get<int>();
    item.height = j.at("height").get<int>();
    item.question = j.at("question").get<std::string>();
    item.answer = j.at("answer").get<std::string>();
    item.category = j.value("category", "");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(e.what());
  }
  if (item.width <= 0 || item.height <= 0) throw ValidationError("must be positive", 0, "width/height");
  return item;
}

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<BenchmarkItem> out;
  std::set<std::pair<BenchmarkKind, std::string>> seen;
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
      out.push_back(benchmark_item_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), n);
    }
    if (!seen.emplace(out.back().kind, out.back().id).second) {
      throw ValidationError("duplicate id '" + out.back().id + "'", n, "id");
    }
  }
  return out;
}

void write_benchmark(const std::filesystem::path& path, std::span<const BenchmarkItem> items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& item : items) out << to_json(item).dump() << '\n';
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<BenchmarkItem> make_benchmark(std::span<const InstructionRecord> records,
                                          const Corpus& corpus) {
  std::vector<BenchmarkItem> out;
  for (const auto& r : records) {
    const ImageEntry* entry = corpus.find(r.image_id);
    if (!entry) throw ValidationError("record " + r.id + " refers to unknown image " + r.image_id);
    auto item = [&](BenchmarkKind kind) {
      BenchmarkItem b;
      b.id = r.id;
      b.kind = kind;
      b.image = r.image;
      b.width = entry->meta.width;
      b.height = entry->meta.height;
      b.question = r.prompt();
      b.answer = r.answer();
      return b;
    };
    switch (r.task) {
      case InstructionTask::ReferringExpression:
        out.push_back(item(BenchmarkKind::Ground));
        break;
      case InstructionTask::GroundedDescription:
        out.push_back(item(BenchmarkKind::Ground));
        out.push_back(item(BenchmarkKind::Description));
        break;
      case InstructionTask::RegionCaption:
        out.push_back(item(BenchmarkKind::Region));
        break;
      case InstructionTask::Vqa: {
        auto b = item(BenchmarkKind::Vqa);
        b.category = r.category;
        out.push_back(std::move(b));
        break;
      }
      case InstructionTask::Classification: {
        auto b = item(BenchmarkKind::Classification);
        b.category = b.answer;
        out.push_back(std::move(b));
        break;
      }
      default:
        break;
    }
  }
  return out;
}

Predictions load_predictions(std::istream& in) {
  Predictions out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), n);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw ValidationError("missing string", n, "id");
    }
    if (!j.contains("output") || !j["output"].is_string()) {
      throw ValidationError("missing string", n, "output");
    }
    auto id = j["id"].get<std::string>();
    if (!out.emplace(id, j["output"].get<std::string>()).second) {
      throw ValidationError("duplicate id '" + id + "'", n, "id");
    }
  }
  return out;
}

Predictions load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return load_predictions(in);
}

std::vector<std::pair<std::size_t, std::size_t>> greedy_match(std::span<const Box> predicted,
                                                              std::span<const Box> truth,
                                                              double tau) {
  struct Candidate {
    double iou;
    std::size_t p, g;
  };
  std::vector<Candidate> cands;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    for (std::size_t g = 0; g < truth.size(); ++g) {
      const double iou = rotated_iou(predicted[p], truth[g]);
      if (iou >= tau) cands.push_back({iou, p, g});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.p != b.p) return a.p < b.p;
    return a.g < b.g;
  });
  std::vector<bool> used_p(predicted.size(), false), used_g(truth.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : cands) {
    if (used_p[c.p] || used_g[c.g]) continue;
    used_p[c.p] = used_g[c.g] = true;
    out.emplace_back(c.p, c.g);
  }
  return out;
}

double Bucket::percent() const {
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * static_cast<double>(matched) / static_cast<double>(total);
}

double GroundingScorecard::macro() const {
  double sum = 0;
  int n = 0;
  for (const auto& [name, b] : by_size) {
    if (b.total) {
      sum += b.percent();
      ++n;
    }
  }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

GroundingScorecard score_grounding(const Predictions& predictions,
                                   std::span<const BenchmarkItem> truth, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)", 0, "tau");
  GroundingScorecard card;
  card.tau = tau;

  std::vector<const BenchmarkItem*> items;
  std::vector<std::vector<Box>> gt;
  std::vector<double> areas;
  for (const auto& item : truth) {
    if (item.kind != BenchmarkKind::Ground) continue;
    items.push_back(&item);
    gt.push_back(boxes_of(decode_response(item.answer), item.width, item.height));
    for (const auto& b : gt.back()) areas.push_back(b.area());
  }
  std::sort(areas.begin(), areas.end());
  if (!areas.empty()) {
    card.area_p20 = nearest_rank(areas, 20);
    card.area_p80 = nearest_rank(areas, 80);
  }
  for (const char* s : {"small", "medium", "large"}) card.by_size[s];
  for (const char* s : {"single", "multi"}) card.by_arity[s];
  for (const char* s : {"refer", "grounding"}) card.by_task[s];

  for (std::size_t q = 0; q < items.size(); ++q) {
    const BenchmarkItem& item = *items[q];
    const std::string* output = find_prediction(predictions, item, card.status);
    const auto pred = predicted_boxes(output, item, card.status);
    const auto matches = greedy_match(pred, gt[q], tau);
    std::vector<bool> hit(gt[q].size(), false);
    for (const auto& [p, g] : matches) hit[g] = true;

    std::string task;
    switch (leading_task_token(item.question)) {
      case TaskToken::Refer: task = "refer"; break;
      case TaskToken::Grounding: task = "grounding"; break;
      case TaskToken::Identify: task = "identify"; break;
      case TaskToken::None: task = "other"; break;
    }
    Bucket& arity = card.by_arity[gt[q].size() == 1 ? "single" : "multi"];
    for (std::size_t g = 0; g < gt[q].size(); ++g) {
      const double a = gt[q][g].area();
      const char* size = a < card.area_p20 ? "small" : a > card.area_p80 ? "large" : "medium";
      const Bucket one{hit[g] ? 1u : 0u, 1};
      card.overall.add(one);
      card.by_size[size].add(one);
      arity.add(one);
      card.by_task[task].add(one);
    }
  }
  finish_status(card.status);
  return card;
}

DescriptionScorecard score_grounded_description(const Predictions& predictions,
                                                std::span<const BenchmarkItem> truth) {
  DescriptionScorecard card;
  double meteor_sum = 0;
  for (const auto& item : truth) {
    if (item.kind != BenchmarkKind::Description) continue;
    const auto gt = boxes_of(decode_response(item.answer), item.width, item.height);
    const std::string* output = find_prediction(predictions, item, card.status);
    const auto pred = predicted_boxes(output, item, card.status);
    card.acc50.add({greedy_match(pred, gt, 0.5).size(), gt.size()});
    card.acc25.add({greedy_match(pred, gt, 0.25).size(), gt.size()});
    if (output) meteor_sum += meteor(plain_text(*output), plain_text(item.answer));
  }
  if (card.status.questions) meteor_sum /= static_cast<double>(card.status.questions);
  card.meteor = meteor_sum;
  finish_status(card.status);
  return card;
}

TextScorecard score_region_captions(const Predictions& predictions,
                                    std::span<const BenchmarkItem> truth) {
  TextScorecard card;
  for (const auto& item : truth) {
    if (item.kind != BenchmarkKind::Region) continue;
    const std::string* output = find_prediction(predictions, item, card.status);
    if (!output) continue;
    const std::string pred = plain_text(*output);
    card.rouge1 += rouge1(pred, item.answer);
    card.rougeL += rougeL(pred, item.answer);
    card.meteor += meteor(pred, item.answer);
  }
  if (card.status.questions) {
    const auto n = static_cast<double>(card.status.questions);
    card.rouge1 /= n;
    card.rougeL /= n;
    card.meteor /= n;
  }
  finish_status(card.status);
  return card;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && std::string_view(".,;:!?").find(out.back()) != std::string_view::npos) {
    out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
  }
  return out;
}

bool contains_phrase(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  for (std::size_t p = haystack.find(needle); p != std::string_view::npos;
       p = haystack.find(needle, p + 1)) {
    const bool left = p == 0 || !is_alnum(haystack[p - 1]);
    const std::size_t e = p + needle.size();
    const bool right = e == haystack.size() || !is_alnum(haystack[e]);
    if (left && right) return true;
  }
  return false;
}

bool classification_correct(std::string_view prediction, std::string_view truth,
                            std::span<const std::string> classes) {
  const std::string pred = class_key(prediction);
  const std::string want = class_key(truth);
  if (pred == want) return true;
  if (!contains_phrase(pred, want)) return false;
  for (const auto& c : classes) {
    const std::string other = class_key(c);
    if (other == want || contains_phrase(want, other)) continue;
    if (contains_phrase(pred, other)) return false;
  }
  return true;
}

ClosedScorecard score_closed_answers(const Predictions& predictions,
                                     std::span<const BenchmarkItem> truth, ClosedKind kind,
                                     std::vector<std::string> classes) {
  ClosedScorecard card;
  if (kind == ClosedKind::Classification && classes.empty()) {
    std::set<std::string> labels;
    for (const auto& item : truth) {
      if (item.kind == BenchmarkKind::Classification) labels.insert(item.answer);
    }
    classes.assign(labels.begin(), labels.end());
  }
  for (const auto& item : truth) {
    std::string category;
    if (kind == ClosedKind::Classification) {
      if (item.kind != BenchmarkKind::Classification) continue;
      category = item.answer;
    } else {
      if (item.kind != BenchmarkKind::Vqa) continue;
      category = item.category.empty() ? "other" : normalize_answer(item.category);
      if (category == "count" || category == "area") {
        ++card.skipped;
        continue;
      }
      if (kind == ClosedKind::RuralUrban && category != "rural_urban" && category != "rural/urban") {
        continue;
      }
    }
    const std::string* output = find_prediction(predictions, item, card.status);
    bool correct = false;
    if (output) {
      correct = kind == ClosedKind::Classification
                    ? classification_correct(*output, item.answer, classes)
                    : normalize_answer(*output) == normalize_answer(item.answer);
    }
    const Bucket one{correct ? 1u : 0u, 1};
    card.per_category[category].add(one);
    card.overall.add(one);
  }
  double sum = 0;
  for (const auto& [name, b] : card.per_category) sum += b.percent();
  card.mean = card.per_category.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : sum / static_cast<double>(card.per_category.size());
  finish_status(card.status);
  return card;
}

nlohmann::ordered_json to_json(const GroundingScorecard& s) {
  nlohmann::ordered_json j;
  j["tau"] = s.tau;
  j["overall"] = bucket_json(s.overall);
  const double macro = s.macro();
  j["macro_over_sizes"] = std::isnan(macro) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(macro);
  j["area_p20"] = s.area_p20;
  j["area_p80"] = s.area_p80;
  j["by_size"] = buckets_json(s.by_size);
  j["by_arity"] = buckets_json(s.by_arity);
  j["by_task"] = buckets_json(s.by_task);
  j["status"] = status_json(s.status);
  return j;
}

nlohmann::ordered_json to_json(const DescriptionScorecard& s) {
  nlohmann::ordered_json j;
  j["acc50"] = bucket_json(s.acc50);
  j["acc25"] = bucket_json(s.acc25);
  j["meteor"] = s.meteor;
  j["status"] = status_json(s.status);
  return j;
}

nlohmann::ordered_json to_json(const TextScorecard& s) {
  nlohmann::ordered_json j;
  j["rouge1"] = s.rouge1;
  j["rougeL"] = s.rougeL;
  j["meteor"] = s.meteor;
  j["status"] = status_json(s.status);
  return j;
}

nlohmann::ordered_json to_json(const ClosedScorecard& s) {
  nlohmann::ordered_json j;
  j["overall"] = bucket_json(s.overall);
  j["mean_over_categories"] =
      std::isnan(s.mean) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(s.mean);
  j["per_category"] = buckets_json(s.per_category);
  j["skipped"] = s.skipped;
  j["status"] = status_json(s.status);
  return j;
}

}  // namespace geoforge
