#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "nidslabel/error.hpp"

namespace nidslabel {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

struct ChatResponse {
  std::string text;
};

// Chat-completion transport. Implementations throw TransportError for
// failures worth retrying.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

// SHA-256 over a canonical JSON encoding of the request.
std::string request_fingerprint(const ChatRequest& request);

// Replay error: exhausted transcript, missing ordinal or fingerprint mismatch.
class TranscriptError : public Error {
 public:
  using Error::Error;
};

// Replays replies from a JSONL transcript by 1-based request ordinal:
//   {"ordinal": 1, "expect_fingerprint": "<hex>"?, "reply": "..."}
// An entry may carry "error" instead of "reply" to inject a transport fault.
// In strict mode an entry's expect_fingerprint must match the request.
class ScriptedClient : public ChatClient {
 public:
  struct Entry {
    std::uint64_t ordinal = 0;
    std::optional<std::string> expect_fingerprint;
    std::string reply;
    std::optional<std::string> error;
  };

  explicit ScriptedClient(std::vector<Entry> entries, bool strict = false);
  static std::vector<Entry> parse_transcript(std::string_view jsonl);
  static std::unique_ptr<ScriptedClient> from_jsonl(std::string_view jsonl, bool strict = false);

  ChatResponse send(const ChatRequest& request) override;

  std::uint64_t requests_sent() const;

 private:
  std::map<std::uint64_t, Entry> entries_;
  std::uint64_t max_ordinal_ = 0;
  bool strict_;
  mutable std::mutex mutex_;
  std::uint64_t sent_ = 0;
};

std::unique_ptr<ChatClient> scripted_client(const std::filesystem::path& transcript, bool strict = false);

// OpenAI-style chat completion adapter over HTTP(S):
//   POST <endpoint> {model, messages: [{role, content}], temperature}
// The reply is choices[0].message.content. In-flight requests are bounded
// and consecutive requests are spaced by at least min_interval.
class HttpChatClient : public ChatClient {
 public:
  struct Options {
    std::string endpoint;  // full URL, e.g. https://host/v1/chat/completions
    std::string model;
    std::string api_key;   // sent as a Bearer token when non-empty
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds min_interval{0};
    std::chrono::seconds timeout{120};
  };

  explicit HttpChatClient(Options options);
  ChatResponse send(const ChatRequest& request) override;

  static std::string encode_request(const std::string& model, const ChatRequest& request);
  static std::string decode_response(std::string_view body);

 private:
  Options options_;
  std::string scheme_host_;
  std::string path_;
  std::counting_semaphore<> slots_;
  std::mutex pacing_mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
};

// Forwards to another client and appends every exchange to a transcript
// that ScriptedClient can replay.
class RecordingClient : public ChatClient {
 public:
  RecordingClient(ChatClient& inner, const std::filesystem::path& transcript);
  ChatResponse send(const ChatRequest& request) override;

 private:
  ChatClient& inner_;
  std::ofstream out_;
  std::mutex mutex_;
  std::uint64_t ordinal_ = 0;
};

}  // namespace nidslabel
