#include "geoforge/expression.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace geoforge {

std::string_view Expression::core() const {
  std::string_view v = text;
  if (v.ends_with('.')) v.remove_suffix(1);
  return v;
}

std::string display_name(std::string_view class_name) {
  std::string out;
  out.reserve(class_name.size());
  for (char c : class_name) {
    if (c == '-' || c == '_') c = ' ';
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  // collapse repeated spaces
  out.erase(std::unique(out.begin(), out.end(), [](char a, char b) { return a == ' ' && b == ' '; }),
            out.end());
  while (!out.empty() && out.back() == ' ') out.pop_back();
  while (!out.empty() && out.front() == ' ') out.erase(out.begin());
  return out;
}

std::string pluralize(std::string_view noun) {
  std::string s(noun);
  if (s.empty()) return s;
  auto ends = [&](std::string_view suf) { return s.ends_with(suf); };
  if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh")) return s + "es";
  if (s.size() >= 2 && s.back() == 'y' &&
      std::string_view("aeiou").find(s[s.size() - 2]) == std::string_view::npos) {
    return s.substr(0, s.size() - 1) + "ies";
  }
  return s + "s";
}

namespace {

void append_word(std::string& out, std::string_view word) {
  if (word.empty()) return;
  if (!out.empty()) out += ' ';
  out += word;
}

// Article plus a2/a3 plus a1, e.g. "The large white plane".
std::string noun_phrase(const AttributeSet& attrs, bool definite, bool size_first,
                        const PhraseSlots& slots) {
  std::string out = definite ? "The" : "A";
  const std::string_view size =
      slots.size && attrs.relative_size != SizeLabel::Normal ? to_string(attrs.relative_size) : "";
  const std::string_view color = slots.color && attrs.color ? std::string_view(*attrs.color) : "";
  if (size_first) {
    append_word(out, size);
    append_word(out, color);
  } else {
    append_word(out, color);
    append_word(out, size);
  }
  append_word(out, display_name(attrs.category));
  return out;
}

}  // namespace

std::string render_phrase(const AttributeSet& attrs, bool definite, bool size_first,
                          const PhraseSlots& slots) {
  std::string out = noun_phrase(attrs, definite, size_first, slots);
  if (slots.location && attrs.relative_location) {
    out += " in the ";
    out += grid_label(*attrs.relative_location);
  }
  out += '.';
  return out;
}

Expression phrase(const AttributeSet& attrs, bool unique_in_class, Rng& rng,
                  const PhraseSlots& slots) {
  std::bernoulli_distribution coin(0.5);
  const bool size_first = coin(rng);
  return Expression{render_phrase(attrs, unique_in_class, size_first, slots), {}, ExpressionKind::Phrase};
}

Expression sentence(const AttributeSet& attrs_i, const AttributeSet& attrs_j,
                    const Relation& relation, bool unique_in_class, Rng& rng) {
  if (std::find(attrs_i.relations.begin(), attrs_i.relations.end(), relation) ==
      attrs_i.relations.end()) {
    throw Error("sentence: relation '" + relation.phrase + "' is not an attribute of the subject");
  }
  std::bernoulli_distribution coin(0.5);
  std::string out = noun_phrase(attrs_i, unique_in_class, coin(rng), {});
  append_word(out, relation.phrase);
  append_word(out, relation.link);
  append_word(out, "the");
  append_word(out, display_name(attrs_j.category));
  if (attrs_j.relative_location) {
    out += " in the ";
    out += grid_label(*attrs_j.relative_location);
  }
  out += '.';
  return Expression{std::move(out), {}, ExpressionKind::Sentence};
}

namespace {

std::string alternation(const std::set<std::string>& words) {
  std::string out = "(?:";
  bool first = true;
  for (const auto& w : words) {
    if (!first) out += '|';
    first = false;
    for (char c : w) {
      if (std::string_view("\\^$.|?*+()[]{}").find(c) != std::string_view::npos) out += '\\';
      out += c;
    }
  }
  return out + ")";
}

std::string adjectives(const Palette& palette) {
  std::set<std::string> colors;
  for (const auto& c : palette.colors()) colors.insert(c.name);
  const std::string size = "(?:small|large)";
  const std::string color = alternation(colors);
  // at most one size word and one colour word, in either order
  return "(?: " + size + "(?: " + color + ")?| " + color + "(?: " + size + ")?)?";
}

const std::string kCategory = "(?: [a-z0-9]+)+";

std::string location() {
  std::set<std::string> labels;
  for (auto l : kGridLabels) labels.insert(std::string(l));
  return "(?: in the " + alternation(labels) + ")";
}

}  // namespace

std::string phrase_grammar(const Palette& palette) {
  return "^(?:The|A)" + adjectives(palette) + kCategory + location() + "?\\.$";
}

std::string sentence_grammar(const Palette& palette, const RelationTable& relations) {
  std::set<std::string> verbs;
  for (const auto& rule : relations.rules()) {
    for (const auto& p : rule.phrases) verbs.insert(p.link.empty() ? p.text : p.text + " " + p.link);
  }
  return "^(?:The|A)" + adjectives(palette) + kCategory + " " + alternation(verbs) + " the" +
         kCategory + location() + "?\\.$";
}

}  // namespace geoforge
