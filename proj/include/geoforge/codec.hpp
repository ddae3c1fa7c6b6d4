#pragma once

// Text grammar shared by dataset emission and evaluation. See docs/formats.md
// for the EBNF.
//
//   token  = "{" "<" int ">" "<" int ">" "<" int ">" "<" int ">" [ "|" "<" int ">" ] "}"
//   span   = "<p>" phrase "</p>" { ws token }
//   prompt = [ "[grounding] " | "[identify] " | "[refer] " ] body

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoforge/spatial_token.hpp"

namespace geoforge {

enum class TaskToken : std::uint8_t { Grounding, Identify, Refer, None };

// "[grounding]", "[identify]", "[refer]"; empty for None.
std::string_view surface(TaskToken t);

// Longest task token at the very start of a prompt, or None.
TaskToken leading_task_token(std::string_view prompt);

std::string encode_token(const SpatialToken& t);

// Exact match of a complete token string. The 4-field form without "|<theta>"
// decodes with theta = 0.
std::optional<SpatialToken> decode_token(std::string_view text);

// Encoded tokens joined by single spaces.
std::string encode_tokens(std::span<const SpatialToken> tokens);

// "<p>phrase</p>" followed by " " and the encoded tokens (when any).
std::string ground_phrase(std::string_view phrase, std::span<const SpatialToken> tokens);

std::string render_prompt(TaskToken task, std::string_view body);

struct GroundedSpan {
  std::string phrase;  // raw text between <p> and </p>; empty for orphan tokens
  std::vector<SpatialToken> boxes;
  std::size_t begin = 0;  // [begin, end) of the phrase in plain_text
  std::size_t end = 0;
  bool marked = false;  // false for tokens that did not follow a <p>..</p>
  std::string markup;   // removed token text, including separating whitespace
};

struct GroundedResponse {
  std::string plain_text;
  std::vector<GroundedSpan> spans;
  std::vector<std::string> warnings;

  std::vector<SpatialToken> boxes() const;
};

// Total parser for model output. Well-formed spans and tokens are extracted;
// anything malformed is kept verbatim in plain_text and reported in warnings.
GroundedResponse decode_response(std::string_view text);

// Inverse of decode_response for the recorded spans.
std::string reinsert_spans(const GroundedResponse& response);

}  // namespace geoforge
