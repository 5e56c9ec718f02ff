#include "scr/gateway.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scr/rng.hpp"
#include "scr/sha256.hpp"
#include "scr/text.hpp"

namespace scr::gateway {

namespace {

using nlohmann::json;

std::string utc_now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json record_to_json(const CompletionRecord& record) {
  return {{"request_hash", record.request_hash},
          {"model_id", record.request.model_id},
          {"system_text", record.request.system_text},
          {"user_text", record.request.user_text},
          {"temperature", record.request.temperature},
          {"max_tokens", record.request.max_tokens},
          {"response_text", record.response_text},
          {"timestamp", record.timestamp}};
}

struct ParsedUrl {
  std::string base;  // scheme://host[:port], handed to httplib
  std::string path = "/v1/chat/completions";
};

ParsedUrl parse_url(const std::string& url) {
  size_t scheme_end;
  if (url.rfind("https://", 0) == 0) {
    scheme_end = 8;
  } else if (url.rfind("http://", 0) == 0) {
    scheme_end = 7;
  } else {
    throw TransportError("endpoint URL must start with http:// or https://: " + url);
  }
  ParsedUrl out;
  size_t slash = url.find('/', scheme_end);
  if (slash == std::string::npos) {
    out.base = url;
  } else {
    out.base = url.substr(0, slash);
    out.path = url.substr(slash);
  }
  if (out.base.size() == scheme_end) {
    throw TransportError("endpoint URL has no host: " + url);
  }
  return out;
}

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "live") return Mode::Live;
  if (s == "record") return Mode::Record;
  if (s == "replay") return Mode::Replay;
  throw ConfigError("gateway mode must be one of live|record|replay, got '" + s + "'");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Live: return "live";
    case Mode::Record: return "record";
    case Mode::Replay: return "replay";
  }
  return "?";
}

std::string request_hash(const CompletionRequest& request) {
  // Canonical framing: a JSON array is unambiguous across field contents.
  json canonical = json::array({request.model_id, request.system_text, request.user_text,
                                request.temperature, request.max_tokens});
  return sha256_hex(canonical.dump());
}

TranscriptStore::TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& ex) {
        throw Error("bad transcript line " + std::to_string(line_no) + " in " + file.string() +
                    ": " + ex.what());
      }
      responses_[j.at("request_hash").get<std::string>()] =
          j.at("response_text").get<std::string>();
    }
  }
}

std::optional<std::string> TranscriptStore::lookup(const std::string& hash) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = responses_.find(hash);
  if (it == responses_.end()) return std::nullopt;
  return it->second;
}

void TranscriptStore::append(const CompletionRecord& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = responses_.emplace(record.request_hash, record.response_text);
  if (!inserted) return;  // already persisted
  std::ofstream out(dir_ / "transcripts.jsonl", std::ios::app);
  if (!out) {
    throw Error("cannot append to transcript store in " + dir_.string());
  }
  out << record_to_json(record).dump() << "\n";
}

size_t TranscriptStore::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return responses_.size();
}

struct LlmGateway::Impl {
  std::mutex rng_mutex;
  SplitMix64 jitter_rng;
  std::mutex inflight_mutex;
  std::condition_variable inflight_cv;
  int inflight = 0;

  explicit Impl(uint64_t seed) : jitter_rng(seed) {}
};

LlmGateway::LlmGateway(GatewayConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_.jitter_seed)) {
  if (config_.mode != Mode::Live) {
    if (config_.cache_dir.empty()) {
      throw ConfigError("gateway cache_dir is required in record/replay mode");
    }
    store_ = std::make_unique<TranscriptStore>(config_.cache_dir);
  }
  if (config_.max_attempts < 1) {
    throw ConfigError("gateway max_attempts must be >= 1");
  }
}

LlmGateway::~LlmGateway() = default;

std::string LlmGateway::complete(const CompletionRequest& request) {
  const std::string hash = request_hash(request);
  if (config_.mode != Mode::Live) {
    if (auto hit = store_->lookup(hash)) {
      return *hit;
    }
    if (config_.mode == Mode::Replay) {
      throw ReplayMissError("no transcript for request " + hash + " (model " + request.model_id +
                            ")");
    }
  }
  std::string response = live_call(request);
  if (config_.mode == Mode::Record) {
    store_->append(CompletionRecord{hash, request, response, utc_now_iso8601()});
  }
  return response;
}

std::string LlmGateway::live_call(const CompletionRequest& request) {
  ParsedUrl url = parse_url(config_.endpoint);

  json messages = json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  json body = {{"model", request.model_id},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  // bound concurrent requests
  {
    std::unique_lock<std::mutex> lock(impl_->inflight_mutex);
    impl_->inflight_cv.wait(lock, [&] { return impl_->inflight < config_.max_in_flight; });
    ++impl_->inflight;
  }
  struct InflightGuard {
    Impl* impl;
    ~InflightGuard() {
      {
        std::lock_guard<std::mutex> lock(impl->inflight_mutex);
        --impl->inflight;
      }
      impl->inflight_cv.notify_one();
    }
  } guard{impl_.get()};

  std::string last_error;
  bool last_was_rate_limit = false;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      int64_t backoff_ms = config_.backoff_base.count() * (int64_t{1} << std::min(attempt - 2, 16));
      backoff_ms = std::min(backoff_ms, static_cast<int64_t>(config_.backoff_cap.count()));
      uint64_t jitter_ms;
      {
        std::lock_guard<std::mutex> lock(impl_->rng_mutex);
        jitter_ms = impl_->jitter_rng.bounded(static_cast<uint64_t>(backoff_ms / 2 + 1));
      }
      std::this_thread::sleep_for(
          std::chrono::milliseconds(backoff_ms / 2 + static_cast<int64_t>(jitter_ms)));
    }

    httplib::Client client(url.base);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    auto result = client.Post(url.path, headers, payload, "application/json");

    if (!result) {
      last_error = "transport failure: " + httplib::to_string(result.error());
      last_was_rate_limit = false;
      continue;
    }
    if (result->status == 200) {
      json parsed;
      try {
        parsed = json::parse(result->body);
      } catch (const json::exception& ex) {
        throw TransportError(std::string("malformed completion response: ") + ex.what());
      }
      if (!parsed.contains("choices") || parsed.at("choices").empty()) {
        throw EmptyResponseError("completion response has no choices");
      }
      const auto& message = parsed.at("choices").at(0).at("message");
      return message.value("content", "");
    }
    if (retryable_status(result->status)) {
      last_error = "HTTP " + std::to_string(result->status);
      last_was_rate_limit = result->status == 429;
      continue;
    }
    throw TransportError("HTTP " + std::to_string(result->status) + ": " + result->body);
  }
  if (last_was_rate_limit) {
    throw RateLimitError("rate limited after " + std::to_string(config_.max_attempts) +
                         " attempts");
  }
  throw TransportError("request failed after " + std::to_string(config_.max_attempts) +
                       " attempts: " + last_error);
}

}  // namespace scr::gateway
