#include "scr/embedding.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scr/sha256.hpp"
#include "scr/text.hpp"

namespace scr::embedding {

namespace {

using nlohmann::json;

}  // namespace

FileEmbeddingProvider::FileEmbeddingProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ProviderError("cannot open embedding file: " + path.string());
  }
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw ProviderError("bad embedding line " + std::to_string(line_no) + " in " +
                          path.string() + ": " + ex.what());
    }
    auto vec = j.at("vector").get<std::vector<double>>();
    if (dimension_ == 0) {
      dimension_ = vec.size();
    } else if (vec.size() != dimension_) {
      throw ProviderError("embedding dimension mismatch at line " + std::to_string(line_no) +
                          ": expected " + std::to_string(dimension_) + ", got " +
                          std::to_string(vec.size()));
    }
    vectors_[j.at("text_hash").get<std::string>()] = std::move(vec);
  }
  if (vectors_.empty()) {
    throw ProviderError("embedding file is empty: " + path.string());
  }
}

std::vector<double> FileEmbeddingProvider::embed(const std::string& text) {
  auto it = vectors_.find(sha256_hex(text));
  if (it == vectors_.end()) {
    throw ProviderError("no precomputed embedding for text hash " + sha256_hex(text));
  }
  return it->second;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config)
    : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw ConfigError("http embedding provider requires an endpoint");
  }
}

std::vector<double> HttpEmbeddingProvider::embed(const std::string& text) {
  size_t scheme_end;
  if (config_.endpoint.rfind("http://", 0) == 0) {
    scheme_end = 7;
  } else if (config_.endpoint.rfind("https://", 0) == 0) {
    scheme_end = 8;
  } else {
    throw ProviderError("embedding endpoint must start with http:// or https://");
  }
  size_t slash = config_.endpoint.find('/', scheme_end);
  std::string base =
      slash == std::string::npos ? config_.endpoint : config_.endpoint.substr(0, slash);
  std::string path = slash == std::string::npos ? "/v1/embeddings" : config_.endpoint.substr(slash);

  json body = {{"model", config_.model_id}, {"input", json::array({text})}};
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.backoff_base_ms * (1 << (attempt - 2))));
    }
    httplib::Client client(base);
    client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result) {
      last_error = "transport failure: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw ProviderError("embedding endpoint returned HTTP " + std::to_string(result->status));
    }
    json parsed;
    try {
      parsed = json::parse(result->body);
    } catch (const json::exception& ex) {
      throw ProviderError(std::string("malformed embedding response: ") + ex.what());
    }
    auto vec = parsed.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (vec.size() != config_.dimension) {
      throw ProviderError("embedding dimension mismatch: expected " +
                          std::to_string(config_.dimension) + ", got " +
                          std::to_string(vec.size()));
    }
    return vec;
  }
  throw ProviderError("embedding request failed after " + std::to_string(config_.max_attempts) +
                      " attempts: " + last_error);
}

void write_embedding_file(const std::filesystem::path& path,
                          const std::map<std::string, std::vector<double>>& by_text_hash) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) {
    throw ProviderError("cannot write embedding file: " + path.string());
  }
  for (const auto& [hash, vec] : by_text_hash) {
    out << json{{"text_hash", hash}, {"vector", vec}}.dump() << "\n";
  }
}

std::unique_ptr<EmbeddingProvider> make_file_provider(const std::filesystem::path& path) {
  return std::make_unique<FileEmbeddingProvider>(path);
}

std::unique_ptr<EmbeddingProvider> make_http_provider(HttpEmbeddingConfig config) {
  return std::make_unique<HttpEmbeddingProvider>(std::move(config));
}

}  // namespace scr::embedding
