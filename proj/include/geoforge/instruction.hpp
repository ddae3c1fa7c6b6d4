#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoforge/attributes.hpp"
#include "geoforge/codec.hpp"
#include "geoforge/expression.hpp"

namespace geoforge {

enum class InstructionTask : std::uint8_t {
  DetailedDescription,
  MultiRound,
  ComplexQa,
  Vqa,
  Classification,
  GroundedDescription,
  RegionCaption,
  ReferringExpression,
};

inline constexpr std::array<InstructionTask, 8> kAllTasks{
    InstructionTask::DetailedDescription, InstructionTask::MultiRound,
    InstructionTask::ComplexQa,           InstructionTask::Vqa,
    InstructionTask::Classification,      InstructionTask::GroundedDescription,
    InstructionTask::RegionCaption,       InstructionTask::ReferringExpression};

// Wire names: "detailed_description", "multi_round", "complex_qa", "vqa",
// "classification", "grounded_description", "region_caption",
// "referring_expression".
std::string_view to_string(InstructionTask t);
// Accepts wire names plus the short aliases used by --tasks (grounding,
// identify, region, refer, detailed, multi, complex, classify).
std::optional<InstructionTask> parse_task(std::string_view name);

enum class Speaker : std::uint8_t { Human, Assistant };

struct Turn {
  Speaker speaker = Speaker::Human;
  std::string value;

  friend bool operator==(const Turn&, const Turn&) = default;
};

inline constexpr std::string_view kImagePlaceholder = "<image>";
inline constexpr std::string_view kDescribePrompt = "Describe the image in detail.";
inline constexpr std::string_view kShortAnswerSuffix = "Answer the question using a single word or phrase.";
inline constexpr std::string_view kClassifyPrefix = "Classify the image within one of the given classes: ";
inline constexpr std::string_view kClassifySuffix = "Answer with one word or short phrase.";
inline constexpr std::string_view kEmptyDescription = "An aerial image.";

struct InstructionRecord {
  std::string id;
  std::string image;  // image path as written to shards
  InstructionTask task = InstructionTask::DetailedDescription;
  std::vector<Turn> conversations;

  // Not serialized.
  std::string image_id;
  std::string category;  // question type for VQA records

  // First human turn without the image placeholder.
  std::string prompt() const;
  // First assistant turn.
  const std::string& answer() const;
};

// Appends the image placeholder to `prompt` on its own line.
std::string with_image(std::string_view prompt);

// Checks the record invariants; returns a description of the first violation.
std::optional<std::string> check_record(const InstructionRecord& record);

nlohmann::ordered_json to_json(const InstructionRecord& record);
InstructionRecord record_from_json(const nlohmann::json& j);

// Instances of an image with their attributes.
struct AnnotatedImage {
  const ImageEntry* entry = nullptr;
  std::span<const AttributeSet> attrs;

  bool unique_in_class(std::size_t index) const;
  std::optional<std::size_t> index_of(std::string_view instance_id) const;
  SpatialToken token(std::size_t index) const;
};

// Text segments of an image description. Grouped segments carry the boxes of
// the objects they mention; relation sentences carry none.
// A sentence is phrase_prefix + phrase + ".".
struct DescriptionSegment {
  std::string phrase_prefix;
  std::string phrase;  // wrapped in <p>..</p> when groundable
  std::vector<SpatialToken> boxes;
  std::vector<std::string> subject_ids;
  bool groundable = false;
};

std::vector<DescriptionSegment> describe(const AnnotatedImage& image, Rng& rng);

std::string make_short_description(const AnnotatedImage& image, Rng& rng);

// [grounding] record; nullopt for images without instances.
std::optional<InstructionRecord> make_grounded_description(const AnnotatedImage& image, Rng& rng);

InstructionRecord make_region_caption(const AnnotatedImage& image, std::size_t index, Rng& rng);

// [refer] record naming the category plus one of colour, size or location;
// the answer grounds every instance the phrase matches. nullopt when the
// instance has no optional attribute.
std::optional<InstructionRecord> make_referring_expression(const AnnotatedImage& image,
                                                           std::size_t index, Rng& rng);

struct ClosedTaskResult {
  std::vector<InstructionRecord> records;
  std::vector<std::string> warnings;
};

// VQA pairs and scene labels carried by the corpus. When `classes` is empty
// the class list is every distinct scene label, sorted.
ClosedTaskResult make_vqa_and_classification(const Corpus& corpus,
                                             std::vector<std::string> classes = {});

std::string classification_prompt(std::span<const std::string> classes);

}  // namespace geoforge
