#include "geoforge/instruction.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "geoforge/error.hpp"

namespace geoforge {

namespace {

struct TaskName {
  InstructionTask task;
  std::string_view wire;
  std::string_view alias;
};

constexpr std::array<TaskName, 8> kTaskNames{{
    {InstructionTask::DetailedDescription, "detailed_description", "detailed"},
    {InstructionTask::MultiRound, "multi_round", "multi"},
    {InstructionTask::ComplexQa, "complex_qa", "complex"},
    {InstructionTask::Vqa, "vqa", "vqa"},
    {InstructionTask::Classification, "classification", "classify"},
    {InstructionTask::GroundedDescription, "grounded_description", "grounding"},
    {InstructionTask::RegionCaption, "region_caption", "identify"},
    {InstructionTask::ReferringExpression, "referring_expression", "refer"},
}};

TaskToken required_token(InstructionTask t) {
  switch (t) {
    case InstructionTask::GroundedDescription: return TaskToken::Grounding;
    case InstructionTask::RegionCaption: return TaskToken::Identify;
    case InstructionTask::ReferringExpression: return TaskToken::Refer;
    default: return TaskToken::None;
  }
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t p = text.find(needle); p != std::string_view::npos;
       p = text.find(needle, p + needle.size())) {
    ++n;
  }
  return n;
}

std::string image_field(const ImageMeta& meta) {
  return meta.path.empty() ? meta.id : meta.path.generic_string();
}

InstructionRecord make_record(const ImageMeta& meta, InstructionTask task, std::string_view suffix,
                              std::string prompt, std::string answer) {
  InstructionRecord r;
  r.id = meta.id + "_" + std::string(to_string(task));
  if (!suffix.empty()) {
    r.id += '_';
    r.id += suffix;
  }
  r.image = image_field(meta);
  r.task = task;
  r.image_id = meta.id;
  r.conversations.push_back({Speaker::Human, with_image(prompt)});
  r.conversations.push_back({Speaker::Assistant, std::move(answer)});
  return r;
}

std::string strip_period(std::string text) {
  if (!text.empty() && text.back() == '.') text.pop_back();
  return text;
}

}  // namespace

std::string_view to_string(InstructionTask t) {
  for (const auto& n : kTaskNames) {
    if (n.task == t) return n.wire;
  }
  return "unknown";
}

std::optional<InstructionTask> parse_task(std::string_view name) {
  for (const auto& n : kTaskNames) {
    if (n.wire == name || n.alias == name) return n.task;
  }
  if (name == "region") return InstructionTask::RegionCaption;
  return std::nullopt;
}

std::string InstructionRecord::prompt() const {
  if (conversations.empty()) return {};
  std::string text = conversations.front().value;
  const std::size_t p = text.find(kImagePlaceholder);
  if (p == std::string::npos) return text;
  std::size_t begin = p;
  std::size_t end = p + kImagePlaceholder.size();
  if (begin > 0 && text[begin - 1] == '\n') {
    --begin;
  } else if (end < text.size() && text[end] == '\n') {
    ++end;
  }
  text.erase(begin, end - begin);
  return text;
}

const std::string& InstructionRecord::answer() const {
  static const std::string empty;
  for (const auto& t : conversations) {
    if (t.speaker == Speaker::Assistant) return t.value;
  }
  return empty;
}

std::string with_image(std::string_view prompt) {
  std::string out(prompt);
  out += '\n';
  out += kImagePlaceholder;
  return out;
}

std::optional<std::string> check_record(const InstructionRecord& record) {
  if (record.id.empty()) return "empty id";
  if (record.image.empty()) return "empty image";
  if (record.conversations.size() < 2) return "fewer than two turns";
  if (record.conversations.size() % 2 != 0) return "conversation does not end with an assistant turn";
  for (std::size_t i = 0; i < record.conversations.size(); ++i) {
    const Speaker expected = i % 2 == 0 ? Speaker::Human : Speaker::Assistant;
    if (record.conversations[i].speaker != expected) {
      return "turn " + std::to_string(i) + " breaks human/assistant alternation";
    }
  }
  const std::string& first = record.conversations.front().value;
  if (count_occurrences(first, kImagePlaceholder) != 1) {
    return "first human turn must contain " + std::string(kImagePlaceholder) + " exactly once";
  }
  const TaskToken want = required_token(record.task);
  const TaskToken got = leading_task_token(first);
  if (want != got) {
    if (want == TaskToken::None) {
      return "task " + std::string(to_string(record.task)) + " must not start with " +
             std::string(surface(got));
    }
    return "task " + std::string(to_string(record.task)) + " must start with \"" +
           std::string(surface(want)) + " \"";
  }
  if (want != TaskToken::None && !first.starts_with(std::string(surface(want)) + " ")) {
    return "task token must be followed by a space";
  }
  return std::nullopt;
}

nlohmann::ordered_json to_json(const InstructionRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["image"] = record.image;
  j["task"] = std::string(to_string(record.task));
  auto& turns = j["conversations"] = nlohmann::ordered_json::array();
  for (const auto& t : record.conversations) {
    turns.push_back({{"from", t.speaker == Speaker::Human ? "human" : "gpt"}, {"value", t.value}});
  }
  return j;
}

InstructionRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  auto text = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError("missing", 0, key);
    if (!it->is_string()) throw ValidationError("expected a string", 0, key);
    return it->get<std::string>();
  };
  InstructionRecord r;
  r.id = text("id");
  r.image = text("image");
  const std::string task = text("task");
  const auto parsed = parse_task(task);
  if (!parsed || to_string(*parsed) != task) {
    throw ValidationError("unknown task '" + task + "'", 0, "task");
  }
  r.task = *parsed;
  auto it = j.find("conversations");
  if (it == j.end()) throw ValidationError("missing", 0, "conversations");
  if (!it->is_array()) throw ValidationError("expected an array", 0, "conversations");
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& t = (*it)[i];
    const std::string field = "conversations[" + std::to_string(i) + "]";
    if (!t.is_object() || !t.contains("from") || !t.contains("value") || !t["from"].is_string() ||
        !t["value"].is_string()) {
      throw ValidationError("turn needs string 'from' and 'value'", 0, field);
    }
    const std::string from = t["from"].get<std::string>();
    Turn turn;
    if (from == "human") {
      turn.speaker = Speaker::Human;
    } else if (from == "gpt") {
      turn.speaker = Speaker::Assistant;
    } else {
      throw ValidationError("unknown speaker '" + from + "'", 0, field);
    }
    turn.value = t["value"].get<std::string>();
    r.conversations.push_back(std::move(turn));
  }
  if (auto problem = check_record(r)) throw ValidationError(*problem, 0, "conversations");
  return r;
}

bool AnnotatedImage::unique_in_class(std::size_t index) const {
  const auto& cls = entry->instances[index].class_name;
  return std::count_if(entry->instances.begin(), entry->instances.end(),
                       [&](const ObbInstance& o) { return o.class_name == cls; }) == 1;
}

std::optional<std::size_t> AnnotatedImage::index_of(std::string_view instance_id) const {
  for (std::size_t i = 0; i < entry->instances.size(); ++i) {
    if (entry->instances[i].instance_id == instance_id) return i;
  }
  return std::nullopt;
}

SpatialToken AnnotatedImage::token(std::size_t index) const {
  return normalize(entry->instances[index].box, entry->meta);
}

std::vector<DescriptionSegment> describe(const AnnotatedImage& image, Rng& rng) {
  const auto& instances = image.entry->instances;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto& g = groups[instances[i].class_name];
    if (g.empty()) order.push_back(instances[i].class_name);
    g.push_back(i);
  }

  std::vector<DescriptionSegment> out;
  for (const auto& cls : order) {
    const auto& members = groups[cls];
    DescriptionSegment seg;
    seg.groundable = true;
    if (members.size() == 1) {
      seg.phrase = strip_period(phrase(image.attrs[members[0]], true, rng).text);
    } else {
      seg.phrase_prefix = "There are ";
      seg.phrase = std::to_string(members.size()) + " " + pluralize(display_name(cls));
    }
    for (std::size_t i : members) {
      seg.boxes.push_back(image.token(i));
      seg.subject_ids.push_back(instances[i].instance_id);
    }
    out.push_back(std::move(seg));
  }

  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& rel : image.attrs[i].relations) {
      const auto j = image.index_of(rel.target_id);
      if (!j) continue;
      DescriptionSegment seg;
      seg.phrase_prefix = strip_period(
          sentence(image.attrs[i], image.attrs[*j], rel, image.unique_in_class(i), rng).text);
      seg.subject_ids = {instances[i].instance_id, instances[*j].instance_id};
      out.push_back(std::move(seg));
    }
  }
  return out;
}

std::string make_short_description(const AnnotatedImage& image, Rng& rng) {
  if (image.entry->instances.empty()) return std::string(kEmptyDescription);
  std::string out;
  for (const auto& seg : describe(image, rng)) {
    if (!out.empty()) out += ' ';
    out += seg.phrase_prefix;
    out += seg.phrase;
    out += '.';
  }
  return out;
}

std::optional<InstructionRecord> make_grounded_description(const AnnotatedImage& image, Rng& rng) {
  if (image.entry->instances.empty()) return std::nullopt;
  std::string answer;
  for (const auto& seg : describe(image, rng)) {
    if (!answer.empty()) answer += ' ';
    answer += seg.phrase_prefix;
    answer += seg.groundable ? ground_phrase(seg.phrase, seg.boxes) : seg.phrase;
    answer += '.';
  }
  return make_record(image.entry->meta, InstructionTask::GroundedDescription, "",
                     render_prompt(TaskToken::Grounding, kDescribePrompt), std::move(answer));
}

InstructionRecord make_region_caption(const AnnotatedImage& image, std::size_t index, Rng& rng) {
  const Expression e = phrase(image.attrs[index], image.unique_in_class(index), rng);
  const SpatialToken t = image.token(index);
  return make_record(image.entry->meta, InstructionTask::RegionCaption, std::to_string(index),
                     render_prompt(TaskToken::Identify, encode_token(t)), e.text);
}

std::optional<InstructionRecord> make_referring_expression(const AnnotatedImage& image,
                                                           std::size_t index, Rng& rng) {
  const AttributeSet& a = image.attrs[index];
  enum class Slot { Color, Size, Location };
  std::vector<Slot> slots;
  if (a.color) slots.push_back(Slot::Color);
  if (a.relative_size != SizeLabel::Normal) slots.push_back(Slot::Size);
  if (a.relative_location) slots.push_back(Slot::Location);
  if (slots.empty()) return std::nullopt;
  const Slot slot = slots[std::uniform_int_distribution<std::size_t>(0, slots.size() - 1)(rng)];

  auto matches = [&](const AttributeSet& b) {
    if (b.category != a.category) return false;
    switch (slot) {
      case Slot::Color: return b.color == a.color;
      case Slot::Size: return b.relative_size == a.relative_size;
      case Slot::Location: return b.relative_location == a.relative_location;
    }
    return false;
  };
  std::vector<SpatialToken> tokens;
  for (std::size_t i = 0; i < image.attrs.size(); ++i) {
    if (matches(image.attrs[i])) tokens.push_back(image.token(i));
  }
  const PhraseSlots ps{slot == Slot::Size, slot == Slot::Color, slot == Slot::Location};
  const std::string text = strip_period(render_phrase(a, tokens.size() == 1, true, ps));
  return make_record(image.entry->meta, InstructionTask::ReferringExpression,
                     std::to_string(index), render_prompt(TaskToken::Refer, "<p>" + text + "</p>"),
                     encode_tokens(tokens));
}

std::string classification_prompt(std::span<const std::string> classes) {
  std::string out(kClassifyPrefix);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) out += ", ";
    out += classes[i];
  }
  out += ". ";
  out += kClassifySuffix;
  return out;
}

ClosedTaskResult make_vqa_and_classification(const Corpus& corpus,
                                             std::vector<std::string> classes) {
  ClosedTaskResult out;
  if (classes.empty()) {
    std::set<std::string> labels;
    for (const auto& img : corpus.images) {
      if (img.scene_label && !img.scene_label->empty()) labels.insert(*img.scene_label);
    }
    classes.assign(labels.begin(), labels.end());
  }
  const std::string cls_prompt = classification_prompt(classes);
  for (const auto& img : corpus.images) {
    for (std::size_t q = 0; q < img.qa.size(); ++q) {
      const QaPair& pair = img.qa[q];
      if (pair.question.empty() || pair.answer.empty()) {
        out.warnings.push_back(img.meta.id + ": question " + std::to_string(q) +
                               " has no " + (pair.question.empty() ? "question" : "answer") +
                               ", skipped");
        continue;
      }
      auto r = make_record(img.meta, InstructionTask::Vqa, std::to_string(q),
                           pair.question + " " + std::string(kShortAnswerSuffix), pair.answer);
      r.category = pair.category;
      out.records.push_back(std::move(r));
    }
    if (img.scene_label) {
      if (img.scene_label->empty()) {
        out.warnings.push_back(img.meta.id + ": empty scene label, skipped");
        continue;
      }
      if (std::find(classes.begin(), classes.end(), *img.scene_label) == classes.end()) {
        out.warnings.push_back(img.meta.id + ": scene label '" + *img.scene_label +
                               "' is not in the class list, skipped");
        continue;
      }
      out.records.push_back(
          make_record(img.meta, InstructionTask::Classification, "", cls_prompt, *img.scene_label));
    }
  }
  return out;
}

}  // namespace geoforge
