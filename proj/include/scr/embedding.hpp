#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "scr/errors.hpp"

namespace scr::embedding {

class ProviderError : public Error {
 public:
  using Error::Error;
};

// Source of fixed-dimension sentence vectors. Implementations must
// tolerate concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
  virtual size_t dimension() const = 0;
};

// Precomputed vectors keyed by sha256(text), one JSON object per line:
// {"text_hash": "...", "vector": [...]}. The offline/test mode.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::filesystem::path& path);

  std::vector<double> embed(const std::string& text) override;
  size_t dimension() const override { return dimension_; }
  size_t size() const { return vectors_.size(); }

 private:
  std::map<std::string, std::vector<double>> vectors_;
  size_t dimension_ = 0;
};

struct HttpEmbeddingConfig {
  std::string endpoint;  // OpenAI-compatible /embeddings URL
  std::string model_id = "all-MiniLM-L6-v2";
  size_t dimension = 384;
  std::string api_key_env = "OPENAI_API_KEY";
  int max_attempts = 5;
  int backoff_base_ms = 250;
  int timeout_ms = 60000;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);

  std::vector<double> embed(const std::string& text) override;
  size_t dimension() const override { return config_.dimension; }

 private:
  HttpEmbeddingConfig config_;
};

// Writes the file-provider format.
void write_embedding_file(const std::filesystem::path& path,
                          const std::map<std::string, std::vector<double>>& by_text_hash);

std::unique_ptr<EmbeddingProvider> make_file_provider(const std::filesystem::path& path);
std::unique_ptr<EmbeddingProvider> make_http_provider(HttpEmbeddingConfig config);

}  // namespace scr::embedding
