#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "geoforge/annotation.hpp"
#include "geoforge/error.hpp"
#include "geoforge/instruction.hpp"

namespace geoforge {

enum class ConversationKind : std::uint8_t { MultiRound, ComplexQa, Detailed };

std::string_view to_string(ConversationKind k);
InstructionTask task_of(ConversationKind k);

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
};

struct ChatRequest {
  ConversationKind kind = ConversationKind::Detailed;
  std::vector<ChatMessage> messages;
};

// Failure talking to the service. Retryable errors are transport failures,
// timeouts, 429 and 5xx responses.
class ChatServiceError : public Error {
 public:
  ChatServiceError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns the assistant message text. Must be safe to call concurrently.
  virtual std::string complete(const ChatRequest& request) = 0;
};

// Deterministic replies built only from the description in the last user
// message. Multi-round replies have at least two question/answer pairs.
class OfflineChatClient : public ChatClient {
 public:
  std::string complete(const ChatRequest& request) override;
};

struct HttpChatSettings {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "vicuna-13b";
  double temperature = 0.2;
  std::string api_key;  // sent as a bearer token when not empty
  int timeout_seconds = 120;
};

// OpenAI-compatible chat completions endpoint.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatSettings settings);
  std::string complete(const ChatRequest& request) override;

 private:
  HttpChatSettings settings_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

// System prompt plus few-shot exemplars: each exemplar pairs a short
// description with the reply the service is expected to produce for it.
struct PromptTemplate {
  struct Example {
    std::string description;
    std::string reply;
  };
  std::string system;
  std::vector<Example> examples;

  // {"system": "...", "examples": [{"description": "...", "reply": "..."}]}
  static PromptTemplate load(const std::filesystem::path& path);
  // The template shipped in assets/prompts/ for this kind.
  static PromptTemplate shipped(ConversationKind kind);
};

ChatRequest build_request(const PromptTemplate& prompt, ConversationKind kind,
                          std::string_view description);

// Splits a reply into turns. Dialogue replies are lines starting with
// "Question:" and "Answer:" (continuation lines join the previous turn with a
// space); a detailed reply is the description text itself. Throws ParseError when the
// reply has no usable turns, or a multi-round reply has fewer than two pairs.
std::vector<Turn> parse_reply(std::string_view reply, ConversationKind kind);

struct SynthesisJob {
  ImageMeta image;
  std::string description;
};

struct SynthesisOptions {
  int attempts = 3;
  std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
  int max_in_flight = 4;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to a real sleep
};

struct SynthesisResult {
  std::vector<InstructionRecord> records;  // job order, failed jobs omitted
  std::vector<std::string> failures;       // "<image id>: <reason>"
};

SynthesisResult synthesize_conversations(std::span<const SynthesisJob> jobs, ConversationKind kind,
                                         ChatClient& client, const PromptTemplate& prompt,
                                         const SynthesisOptions& options = {});

}  // namespace geoforge
