#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "scr/errors.hpp"

namespace scr::gateway {

class TransportError : public Error {
 public:
  using Error::Error;
};

class RateLimitError : public TransportError {
 public:
  using TransportError::TransportError;
};

class ReplayMissError : public Error {
 public:
  using Error::Error;
};

class EmptyResponseError : public Error {
 public:
  using Error::Error;
};

enum class Mode { Live, Record, Replay };

Mode mode_from_string(const std::string& s);
std::string to_string(Mode mode);

struct CompletionRequest {
  std::string model_id;
  std::string system_text;  // empty = no system message
  std::string user_text;
  double temperature = 0.0;
  int max_tokens = 256;
};

// Content-addressed key over every request field.
std::string request_hash(const CompletionRequest& request);

struct CompletionRecord {
  std::string request_hash;
  CompletionRequest request;
  std::string response_text;
  std::string timestamp;  // UTC ISO-8601, informational only
};

// Append-only JSONL store of CompletionRecords under a cache directory.
// All *.jsonl files in the directory are loaded on open; appends go to
// transcripts.jsonl. Writes are serialized; lookups are safe from any
// number of threads.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path dir);

  std::optional<std::string> lookup(const std::string& hash) const;
  void append(const CompletionRecord& record);
  size_t size() const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> responses_;
  mutable std::mutex mutex_;
};

struct GatewayConfig {
  std::string endpoint;  // full URL of the chat-completion endpoint
  std::string model_id = "gpt-4.1";
  Mode mode = Mode::Replay;
  std::filesystem::path cache_dir;      // transcript store location
  std::string api_key_env = "OPENAI_API_KEY";
  int max_attempts = 5;
  std::chrono::milliseconds backoff_base{250};
  std::chrono::milliseconds backoff_cap{8000};
  std::chrono::milliseconds timeout{60000};
  int max_in_flight = 4;
  uint64_t jitter_seed = 42;  // jitter only affects sleep timing
};

// Single chokepoint for completion traffic. Shareable across threads.
class LlmGateway {
 public:
  explicit LlmGateway(GatewayConfig config);
  ~LlmGateway();

  LlmGateway(const LlmGateway&) = delete;
  LlmGateway& operator=(const LlmGateway&) = delete;

  // Live: HTTP call with exponential-backoff retry on timeout/429/5xx.
  // Record: store lookup first, live call + persist on miss.
  // Replay: store lookup only; ReplayMissError on miss.
  std::string complete(const CompletionRequest& request);

  const GatewayConfig& config() const { return config_; }
  const TranscriptStore* store() const { return store_.get(); }

 private:
  std::string live_call(const CompletionRequest& request);

  GatewayConfig config_;
  std::unique_ptr<TranscriptStore> store_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace scr::gateway
