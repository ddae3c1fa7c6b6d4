#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "geoforge/attributes.hpp"

namespace geoforge {

enum class ExpressionKind : std::uint8_t { Phrase, Sentence };

struct Expression {
  std::string text;  // single sentence ending in "."
  std::vector<std::string> subject_ids;
  ExpressionKind kind = ExpressionKind::Phrase;

  // text without the final period, for embedding in longer text
  std::string_view core() const;
};

using Rng = std::mt19937_64;

// Surface form of a class name: '-' and '_' become spaces, lowercase.
std::string display_name(std::string_view class_name);
std::string pluralize(std::string_view noun);

// Which optional slots a phrase renders. A size of Normal is never rendered.
struct PhraseSlots {
  bool size = true;
  bool color = true;
  bool location = true;
};

// "The/A <a3> <a2> a1 in the <a4>." with a2/a3 in the given order.
std::string render_phrase(const AttributeSet& attrs, bool definite, bool size_first,
                          const PhraseSlots& slots = {});

// a2/a3 order drawn from rng.
Expression phrase(const AttributeSet& attrs, bool unique_in_class, Rng& rng,
                  const PhraseSlots& slots = {});

// "The/A <ai3> <ai2> ai1 ai5 the aj1 in the <aj4>." Throws when `relation`
// is not one of attrs_i.relations.
Expression sentence(const AttributeSet& attrs_i, const AttributeSet& attrs_j,
                    const Relation& relation, bool unique_in_class, Rng& rng);

// Regular expressions (ECMAScript) for the two templates over a palette.
std::string phrase_grammar(const Palette& palette);
std::string sentence_grammar(const Palette& palette, const RelationTable& relations);

}  // namespace geoforge
