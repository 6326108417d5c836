#include "nidslabel/chat_client.hpp"

#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nidslabel/hashing.hpp"

namespace nidslabel {

std::string request_fingerprint(const ChatRequest& request) {
  nlohmann::ordered_json doc;
  auto messages = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  doc["messages"] = std::move(messages);
  doc["temperature"] = request.temperature;
  return sha256_hex(doc.dump());
}

ScriptedClient::ScriptedClient(std::vector<Entry> entries, bool strict) : strict_(strict) {
  for (auto& e : entries) {
    if (e.ordinal == 0) throw ValidationError("transcript ordinals are 1-based");
    max_ordinal_ = std::max(max_ordinal_, e.ordinal);
    const auto ord = e.ordinal;
    if (!entries_.emplace(ord, std::move(e)).second)
      throw ValidationError("duplicate transcript ordinal " + std::to_string(ord));
  }
}

std::vector<ScriptedClient::Entry> ScriptedClient::parse_transcript(std::string_view text) {
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      Entry e;
      e.ordinal = obj.at("ordinal").get<std::uint64_t>();
      if (obj.contains("expect_fingerprint") && !obj["expect_fingerprint"].is_null())
        e.expect_fingerprint = obj["expect_fingerprint"].get<std::string>();
      if (obj.contains("error") && !obj["error"].is_null()) e.error = obj["error"].get<std::string>();
      if (obj.contains("reply")) e.reply = obj["reply"].get<std::string>();
      else if (!e.error) throw ParseError("transcript entry needs 'reply' or 'error'", line_no);
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("malformed transcript entry: ") + ex.what(), line_no);
    }
  }
  return entries;
}

std::unique_ptr<ScriptedClient> ScriptedClient::from_jsonl(std::string_view jsonl, bool strict) {
  return std::make_unique<ScriptedClient>(parse_transcript(jsonl), strict);
}

ChatResponse ScriptedClient::send(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  const auto ordinal = ++sent_;
  if (ordinal > max_ordinal_)
    throw TranscriptError("transcript exhausted at request " + std::to_string(ordinal) + " (" +
                          std::to_string(max_ordinal_) + " scripted)");
  auto it = entries_.find(ordinal);
  if (it == entries_.end()) throw TranscriptError("transcript has no entry for request " + std::to_string(ordinal));
  const auto& e = it->second;
  if (strict_ && e.expect_fingerprint) {
    const auto actual = request_fingerprint(request);
    if (actual != *e.expect_fingerprint)
      throw TranscriptError("prompt fingerprint mismatch at request " + std::to_string(ordinal) + ": expected " +
                            *e.expect_fingerprint + ", got " + actual);
  }
  if (e.error) throw TransportError("scripted transport fault at request " + std::to_string(ordinal) + ": " + *e.error);
  return {e.reply};
}

std::uint64_t ScriptedClient::requests_sent() const {
  std::lock_guard lock(mutex_);
  return sent_;
}

std::unique_ptr<ChatClient> scripted_client(const std::filesystem::path& transcript, bool strict) {
  std::ifstream in(transcript, std::ios::binary);
  if (!in) throw ValidationError("cannot open transcript " + transcript.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ScriptedClient::from_jsonl(buf.str(), strict);
}

namespace {

std::ptrdiff_t clamp_slots(std::size_t n) { return static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, n)); }

}  // namespace

HttpChatClient::HttpChatClient(Options options)
    : options_(std::move(options)), slots_(clamp_slots(options_.max_in_flight)) {
  const auto scheme_end = options_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint must be an absolute URL: " + options_.endpoint);
  const auto path_start = options_.endpoint.find('/', scheme_end + 3);
  scheme_host_ = options_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : options_.endpoint.substr(path_start);
  if (options_.model.empty()) throw ValidationError("provider model name is required");
}

std::string HttpChatClient::encode_request(const std::string& model, const ChatRequest& request) {
  nlohmann::ordered_json doc;
  doc["model"] = model;
  auto messages = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  doc["messages"] = std::move(messages);
  doc["temperature"] = request.temperature;
  return doc.dump();
}

std::string HttpChatClient::decode_response(std::string_view body) {
  try {
    const auto doc = nlohmann::json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unexpected chat completion response: ") + e.what());
  }
}

ChatResponse HttpChatClient::send(const ChatRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};

  {
    std::unique_lock lock(pacing_mutex_);
    const auto now = std::chrono::steady_clock::now();
    const auto start = std::max(now, next_slot_);
    next_slot_ = start + options_.min_interval;
    lock.unlock();
    if (start > now) std::this_thread::sleep_until(start);
  }

  httplib::Client http(scheme_host_);
  http.set_connection_timeout(options_.timeout);
  http.set_read_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  auto res = http.Post(path_, headers, encode_request(options_.model, request), "application/json");
  if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + options_.endpoint);
  return {decode_response(res->body)};
}

RecordingClient::RecordingClient(ChatClient& inner, const std::filesystem::path& transcript)
    : inner_(inner), out_(transcript, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot write transcript " + transcript.string());
}

ChatResponse RecordingClient::send(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  const auto ordinal = ++ordinal_;
  nlohmann::ordered_json entry;
  entry["ordinal"] = ordinal;
  entry["expect_fingerprint"] = request_fingerprint(request);
  try {
    auto response = inner_.send(request);
    entry["reply"] = response.text;
    out_ << entry.dump() << '\n' << std::flush;
    return response;
  } catch (const TransportError& e) {
    entry["error"] = e.what();
    out_ << entry.dump() << '\n' << std::flush;
    throw;
  }
}

}  // namespace nidslabel
