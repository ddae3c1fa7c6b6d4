#include "geoforge/text_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_map>

namespace geoforge {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

double f1(double overlap, std::size_t cand, std::size_t ref) {
  if (cand == 0 && ref == 0) return 1.0;
  if (cand == 0 || ref == 0 || overlap == 0) return 0.0;
  const double p = overlap / static_cast<double>(cand);
  const double r = overlap / static_cast<double>(ref);
  return 2 * p * r / (p + r);
}

}  // namespace

double rouge1(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : r) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : c) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return f1(static_cast<double>(overlap), c.size(), r.size());
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rougeL(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return f1(static_cast<double>(lcs_length(c, r)), c.size(), r.size());
}

namespace {

// Branch-and-bound over candidate positions. Every word w must end up matched
// exactly min(count_c(w), count_r(w)) times; among such alignments the one
// with the fewest chunks is kept.
class ChunkSearch {
 public:
  ChunkSearch(const std::vector<int>& cand, const std::vector<int>& ref, int vocab,
              std::size_t budget)
      : cand_(cand), ref_(ref), budget_(budget), used_(ref.size(), false),
        need_(static_cast<std::size_t>(vocab), 0), matched_(static_cast<std::size_t>(vocab), 0),
        remaining_(static_cast<std::size_t>(vocab), 0), positions_(static_cast<std::size_t>(vocab)) {
    std::vector<std::size_t> cc(static_cast<std::size_t>(vocab), 0), rc(static_cast<std::size_t>(vocab), 0);
    for (int w : cand_) ++cc[static_cast<std::size_t>(w)];
    for (std::size_t j = 0; j < ref_.size(); ++j) {
      ++rc[static_cast<std::size_t>(ref_[j])];
      positions_[static_cast<std::size_t>(ref_[j])].push_back(j);
    }
    for (std::size_t w = 0; w < need_.size(); ++w) {
      need_[w] = std::min(cc[w], rc[w]);
      total_ += need_[w];
    }
    remaining_ = cc;
  }

  MeteorAlignment run() {
    if (total_ == 0) return {0, 0, true};
    visit(0, -1, 0);
    return {total_, best_, !exhausted_};
  }

 private:
  void visit(std::size_t i, long prev, std::size_t chunks) {
    if (chunks >= best_) return;
    if (++nodes_ > budget_ && best_ != kInf) {
      exhausted_ = true;
      return;
    }
    if (i == cand_.size()) {
      best_ = chunks;
      return;
    }
    const auto w = static_cast<std::size_t>(cand_[i]);
    --remaining_[w];
    if (matched_[w] < need_[w]) {
      // Continuing the current chunk first finds good solutions early.
      if (prev >= 0 && static_cast<std::size_t>(prev + 1) < ref_.size() &&
          ref_[static_cast<std::size_t>(prev + 1)] == cand_[i] && !used_[static_cast<std::size_t>(prev + 1)]) {
        take(i, static_cast<std::size_t>(prev + 1), chunks);
      }
      for (std::size_t j : positions_[w]) {
        if (used_[j] || (prev >= 0 && static_cast<long>(j) == prev + 1)) continue;
        take(i, j, chunks + 1);
      }
    }
    // Skipping is allowed only while the word can still reach its quota.
    if (matched_[w] + remaining_[w] >= need_[w]) visit(i + 1, -1, chunks);
    ++remaining_[w];
  }

  void take(std::size_t i, std::size_t j, std::size_t chunks) {
    const auto w = static_cast<std::size_t>(cand_[i]);
    used_[j] = true;
    ++matched_[w];
    visit(i + 1, static_cast<long>(j), chunks);
    --matched_[w];
    used_[j] = false;
  }

  static constexpr std::size_t kInf = static_cast<std::size_t>(-1);
  const std::vector<int>& cand_;
  const std::vector<int>& ref_;
  std::size_t budget_;
  std::vector<bool> used_;
  std::vector<std::size_t> need_, matched_, remaining_;
  std::vector<std::vector<std::size_t>> positions_;
  std::size_t total_ = 0;
  std::size_t best_ = kInf;
  std::size_t nodes_ = 0;
  bool exhausted_ = false;
};

}  // namespace

MeteorAlignment meteor_align(const std::vector<std::string>& candidate,
                             const std::vector<std::string>& reference, std::size_t node_budget) {
  std::map<std::string, int> ids;
  auto id_of = [&](const std::string& s) {
    auto [it, inserted] = ids.emplace(s, static_cast<int>(ids.size()));
    return it->second;
  };
  std::vector<int> c, r;
  for (const auto& t : candidate) c.push_back(id_of(t));
  for (const auto& t : reference) r.push_back(id_of(t));
  ChunkSearch search(c, r, static_cast<int>(ids.size()), node_budget);
  return search.run();
}

double meteor_score(std::size_t matches, std::size_t chunks, std::size_t candidate_len,
                    std::size_t reference_len) {
  if (matches == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(candidate_len);
  const double r = m / static_cast<double>(reference_len);
  const double fmean = 10 * p * r / (r + 9 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3);
  return fmean * (1 - penalty);
}

double meteor(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  const MeteorAlignment a = meteor_align(c, r);
  return meteor_score(a.matches, a.chunks, c.size(), r.size());
}

}  // namespace geoforge
