#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace geoforge {

// Lowercased maximal runs of letters/digits; everything else separates
// tokens. Bytes >= 0x80 are treated as letters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

// Unigram-overlap F1. Both empty -> 1, exactly one empty -> 0.
double rouge1(std::string_view candidate, std::string_view reference);

// LCS-based F1 over the same tokens, same empty-input conventions.
double rougeL(std::string_view candidate, std::string_view reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  bool exact = true;  // false when the chunk search hit its node budget
};

// Maximum one-to-one exact unigram alignment with the fewest chunks.
MeteorAlignment meteor_align(const std::vector<std::string>& candidate,
                             const std::vector<std::string>& reference,
                             std::size_t node_budget = 2'000'000);

// F_mean = 10PR / (R + 9P), penalty = 0.5 (chunks / matches)^3,
// score = F_mean (1 - penalty). No matches -> 0.
double meteor(std::string_view candidate, std::string_view reference);
double meteor_score(std::size_t matches, std::size_t chunks, std::size_t candidate_len,
                    std::size_t reference_len);

}  // namespace geoforge
