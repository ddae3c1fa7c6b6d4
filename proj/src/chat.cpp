#include "geoforge/chat.hpp"

#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "geoforge/util.hpp"

namespace geoforge {

std::string_view to_string(ConversationKind k) {
  switch (k) {
    case ConversationKind::MultiRound: return "multi_round";
    case ConversationKind::ComplexQa: return "complex_qa";
    case ConversationKind::Detailed: return "detailed";
  }
  return "unknown";
}

InstructionTask task_of(ConversationKind k) {
  switch (k) {
    case ConversationKind::MultiRound: return InstructionTask::MultiRound;
    case ConversationKind::ComplexQa: return InstructionTask::ComplexQa;
    case ConversationKind::Detailed: return InstructionTask::DetailedDescription;
  }
  return InstructionTask::DetailedDescription;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '.' && (i + 1 == text.size() || text[i + 1] == ' ')) {
      std::string s = trim(text.substr(start, i + 1 - start));
      if (!s.empty()) out.push_back(std::move(s));
      start = i + 1;
    }
  }
  std::string tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

}  // namespace

std::string OfflineChatClient::complete(const ChatRequest& request) {
  std::string description;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") {
      description = trim(it->content);
      break;
    }
  }
  if (description.empty()) throw ChatServiceError("request has no user message", false);
  if (request.kind == ConversationKind::Detailed) return description;
  if (request.kind == ConversationKind::ComplexQa) {
    return "Question: What can be inferred about this scene from the objects it contains?\n"
           "Answer: The scene can be summarized from what is visible. " + description + "\n";
  }
  const auto parts = sentences(description);
  std::string out = "Question: What can be seen in this image?\nAnswer: " + parts.front() + "\n";
  if (parts.size() == 1) {
    out += "Question: Can you summarize the scene?\nAnswer: " + description + "\n";
    return out;
  }
  for (std::size_t i = 1; i < parts.size() && i < 4; ++i) {
    out += "Question: What else is present in the image?\nAnswer: " + parts[i] + "\n";
  }
  return out;
}

HttpChatClient::HttpChatClient(HttpChatSettings settings) : settings_(std::move(settings)) {
  const std::string& url = settings_.endpoint;
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error("chat endpoint must be an http(s) URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  base_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : url.substr(slash);
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  nlohmann::json body;
  body["model"] = settings_.model;
  body["temperature"] = settings_.temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }

  httplib::Client client(base_);
  client.set_connection_timeout(settings_.timeout_seconds);
  client.set_read_timeout(settings_.timeout_seconds);
  httplib::Headers headers;
  if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);
  const auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw ChatServiceError("request to " + settings_.endpoint + " failed: " + httplib::to_string(res.error()),
                           true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw ChatServiceError("service returned HTTP " + std::to_string(res->status), true);
  }
  if (res->status != 200) {
    throw ChatServiceError("service returned HTTP " + std::to_string(res->status), false);
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ChatServiceError(std::string("unparseable service reply: ") + e.what(), false);
  }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open prompt template " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  PromptTemplate t;
  try {
    t.system = j.at("system").get<std::string>();
    for (const auto& ex : j.value("examples", nlohmann::json::array())) {
      t.examples.push_back({ex.at("description").get<std::string>(), ex.at("reply").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return t;
}

PromptTemplate PromptTemplate::shipped(ConversationKind kind) {
  return load(std::filesystem::path(GEOFORGE_ASSET_DIR) / "prompts" /
              (std::string(to_string(kind)) + ".json"));
}

ChatRequest build_request(const PromptTemplate& prompt, ConversationKind kind,
                          std::string_view description) {
  ChatRequest r;
  r.kind = kind;
  r.messages.push_back({"system", prompt.system});
  for (const auto& ex : prompt.examples) {
    r.messages.push_back({"user", ex.description});
    r.messages.push_back({"assistant", ex.reply});
  }
  r.messages.push_back({"user", std::string(description)});
  return r;
}

std::vector<Turn> parse_reply(std::string_view reply, ConversationKind kind) {
  if (kind == ConversationKind::Detailed) {
    std::string text = trim(reply);
    if (text.empty()) throw ParseError("empty reply");
    return {{Speaker::Human, std::string(kDescribePrompt)}, {Speaker::Assistant, std::move(text)}};
  }
  std::vector<Turn> turns;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= reply.size()) {
    auto nl = reply.find('\n', pos);
    if (nl == std::string_view::npos) nl = reply.size();
    const std::string line = trim(reply.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.starts_with("Question:") || line.starts_with("Answer:")) {
      const bool question = line.starts_with("Question:");
      const Speaker speaker = question ? Speaker::Human : Speaker::Assistant;
      const Speaker expected = turns.size() % 2 == 0 ? Speaker::Human : Speaker::Assistant;
      if (speaker != expected) {
        throw ParseError(std::string(question ? "question" : "answer") + " out of order", line_no);
      }
      std::string text = trim(std::string_view(line).substr(question ? 9 : 7));
      turns.push_back({speaker, std::move(text)});
    } else if (!turns.empty()) {
      turns.back().value += ' ';
      turns.back().value += line;
    } else {
      throw ParseError("text before the first question", line_no);
    }
  }
  if (turns.size() % 2 != 0) throw ParseError("question without an answer");
  for (const auto& t : turns) {
    if (t.value.empty()) throw ParseError("empty question or answer");
  }
  const std::size_t pairs = turns.size() / 2;
  if (pairs == 0) throw ParseError("reply contains no question/answer pairs");
  if (kind == ConversationKind::MultiRound && pairs < 2) {
    throw ParseError("multi-round reply needs at least two question/answer pairs");
  }
  return turns;
}

SynthesisResult synthesize_conversations(std::span<const SynthesisJob> jobs, ConversationKind kind,
                                         ChatClient& client, const PromptTemplate& prompt,
                                         const SynthesisOptions& options) {
  const auto sleep = options.sleep ? options.sleep
                                   : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::vector<std::optional<InstructionRecord>> records(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), options.max_in_flight, [&](std::size_t i) {
    const SynthesisJob& job = jobs[i];
    const ChatRequest request = build_request(prompt, kind, job.description);
    std::string reply;
    std::chrono::milliseconds delay = options.backoff;
    for (int attempt = 1;; ++attempt) {
      try {
        reply = client.complete(request);
        break;
      } catch (const ChatServiceError& e) {
        if (!e.retryable() || attempt >= options.attempts) {
          failures[i] = job.image.id + ": " + e.what() + " (after " + std::to_string(attempt) +
                        (attempt == 1 ? " attempt)" : " attempts)");
          return;
        }
        sleep(delay);
        delay *= 2;
      }
    }
    std::vector<Turn> turns;
    try {
      turns = parse_reply(reply, kind);
    } catch (const ParseError& e) {
      failures[i] = job.image.id + ": unparseable reply: " + e.what();
      return;
    }
    InstructionRecord r;
    r.task = task_of(kind);
    r.id = job.image.id + "_" + std::string(to_string(r.task));
    r.image = job.image.path.empty() ? job.image.id : job.image.path.generic_string();
    r.image_id = job.image.id;
    turns.front().value = with_image(turns.front().value);
    r.conversations = std::move(turns);
    records[i] = std::move(r);
  });

  SynthesisResult out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (records[i]) out.records.push_back(std::move(*records[i]));
    if (!failures[i].empty()) out.failures.push_back(std::move(failures[i]));
  }
  return out;
}

}  // namespace geoforge
