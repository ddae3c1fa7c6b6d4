#include "geoforge/codec.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace geoforge {

std::string_view surface(TaskToken t) {
  switch (t) {
    case TaskToken::Grounding: return "[grounding]";
    case TaskToken::Identify: return "[identify]";
    case TaskToken::Refer: return "[refer]";
    case TaskToken::None: return "";
  }
  return "";
}

TaskToken leading_task_token(std::string_view prompt) {
  for (TaskToken t : {TaskToken::Grounding, TaskToken::Identify, TaskToken::Refer}) {
    if (prompt.starts_with(surface(t))) return t;
  }
  return TaskToken::None;
}

std::string encode_token(const SpatialToken& t) {
  std::string out;
  out.reserve(28);
  out += '{';
  for (int v : {t.x_left, t.y_top, t.x_right, t.y_bottom}) {
    out += '<';
    out += std::to_string(v);
    out += '>';
  }
  out += "|<";
  out += std::to_string(t.theta);
  out += ">}";
  return out;
}

std::string encode_tokens(std::span<const SpatialToken> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += encode_token(tokens[i]);
  }
  return out;
}

std::string ground_phrase(std::string_view phrase, std::span<const SpatialToken> tokens) {
  std::string out = "<p>";
  out += phrase;
  out += "</p>";
  if (!tokens.empty()) {
    out += ' ';
    out += encode_tokens(tokens);
  }
  return out;
}

std::string render_prompt(TaskToken task, std::string_view body) {
  if (task == TaskToken::None) return std::string(body);
  std::string out(surface(task));
  out += ' ';
  out += body;
  return out;
}

std::vector<SpatialToken> GroundedResponse::boxes() const {
  std::vector<SpatialToken> out;
  for (const auto& s : spans) out.insert(out.end(), s.boxes.begin(), s.boxes.end());
  return out;
}

namespace {

enum class TokenScan { NotAToken, Malformed, Ok };

struct ScanResult {
  TokenScan status = TokenScan::NotAToken;
  SpatialToken token;
  std::size_t end = 0;  // one past '}' when Ok
};

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Reads "<digits>" at pos; at most 3 digits so values never overflow.
bool read_field(std::string_view s, std::size_t& pos, int& value) {
  if (pos >= s.size() || s[pos] != '<') return false;
  std::size_t p = pos + 1;
  const std::size_t start = p;
  int v = 0;
  while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])) && p - start < 3) {
    v = v * 10 + (s[p] - '0');
    ++p;
  }
  if (p == start || p >= s.size() || s[p] != '>') return false;
  value = v;
  pos = p + 1;
  return true;
}

ScanResult scan_token(std::string_view s, std::size_t pos) {
  ScanResult r;
  if (pos + 1 >= s.size() || s[pos] != '{' || s[pos + 1] != '<') return r;
  r.status = TokenScan::Malformed;
  std::size_t p = pos + 1;
  std::array<int, 4> v{};
  for (int& field : v) {
    if (!read_field(s, p, field)) return r;
  }
  int theta = 0;
  if (p < s.size() && s[p] == '|') {
    ++p;
    if (!read_field(s, p, theta)) return r;
  }
  if (p >= s.size() || s[p] != '}') return r;
  SpatialToken t{v[0], v[1], v[2], v[3], theta};
  if (!t.valid()) return r;
  r.status = TokenScan::Ok;
  r.token = t;
  r.end = p + 1;
  return r;
}

// Consumes whitespace-separated tokens starting at pos (leading whitespace
// allowed). Returns the end of the last consumed token, or pos if none.
std::size_t attach_tokens(std::string_view s, std::size_t pos, GroundedSpan& span) {
  std::size_t cursor = pos;
  while (true) {
    std::size_t p = cursor;
    while (p < s.size() && is_ws(s[p])) ++p;
    const ScanResult r = scan_token(s, p);
    if (r.status != TokenScan::Ok) break;
    span.boxes.push_back(r.token);
    cursor = r.end;
  }
  span.markup.assign(s.substr(pos, cursor - pos));
  return cursor;
}

constexpr std::string_view kOpen = "<p>";
constexpr std::string_view kClose = "</p>";

}  // namespace

std::optional<SpatialToken> decode_token(std::string_view text) {
  const ScanResult r = scan_token(text, 0);
  if (r.status != TokenScan::Ok || r.end != text.size()) return std::nullopt;
  return r.token;
}

GroundedResponse decode_response(std::string_view text) {
  GroundedResponse out;
  out.plain_text.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::string_view rest = text.substr(pos);
    if (rest.starts_with(kOpen)) {
      const std::size_t close = text.find(kClose, pos + kOpen.size());
      const std::size_t reopen = text.find(kOpen, pos + kOpen.size());
      if (close == std::string_view::npos || reopen < close) {
        out.warnings.push_back("unclosed <p> at offset " + std::to_string(pos));
        out.plain_text += kOpen;
        pos += kOpen.size();
        continue;
      }
      GroundedSpan span;
      span.marked = true;
      span.phrase.assign(text.substr(pos + kOpen.size(), close - pos - kOpen.size()));
      span.begin = out.plain_text.size();
      out.plain_text += span.phrase;
      span.end = out.plain_text.size();
      pos = attach_tokens(text, close + kClose.size(), span);
      out.spans.push_back(std::move(span));
      continue;
    }
    if (rest.starts_with(kClose)) {
      out.warnings.push_back("unmatched </p> at offset " + std::to_string(pos));
      out.plain_text += kClose;
      pos += kClose.size();
      continue;
    }
    if (text[pos] == '{') {
      const ScanResult r = scan_token(text, pos);
      if (r.status == TokenScan::Ok) {
        GroundedSpan span;
        span.begin = span.end = out.plain_text.size();
        pos = attach_tokens(text, pos, span);
        out.spans.push_back(std::move(span));
        continue;
      }
      if (r.status == TokenScan::Malformed) {
        out.warnings.push_back("malformed box token at offset " + std::to_string(pos));
      }
    }
    out.plain_text += text[pos];
    ++pos;
  }
  return out;
}

std::string reinsert_spans(const GroundedResponse& response) {
  std::vector<const GroundedSpan*> order;
  for (const auto& s : response.spans) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const GroundedSpan* a, const GroundedSpan* b) { return a->begin < b->begin; });
  std::string out;
  std::size_t cursor = 0;
  const std::string& plain = response.plain_text;
  for (const GroundedSpan* s : order) {
    out.append(plain, cursor, s->begin - cursor);
    if (s->marked) {
      out += kOpen;
      out.append(plain, s->begin, s->end - s->begin);
      out += kClose;
    }
    out += s->markup;
    cursor = s->end;
  }
  out.append(plain, cursor, std::string::npos);
  return out;
}

}  // namespace geoforge
