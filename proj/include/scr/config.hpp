#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scr/classify.hpp"
#include "scr/embedding.hpp"
#include "scr/errors.hpp"
#include "scr/gateway.hpp"
#include "scr/genpipe.hpp"

namespace scr {

// One declarative config drives every pipeline stage; any field can be
// overridden from the command line.
struct PipelineConfig {
  // paths
  std::filesystem::path corpus_path;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  std::filesystem::path prompts_dir;  // empty = built-in prompt texts

  // gateway
  std::string endpoint;
  std::string model_id = "gpt-4.1";
  std::string mode = "replay";  // live | record | replay
  std::string api_key_env = "OPENAI_API_KEY";
  int max_in_flight = 4;
  int max_attempts = 5;
  int backoff_base_ms = 250;
  int backoff_cap_ms = 8000;
  int timeout_ms = 60000;

  // thresholds
  double meteor_gate = 0.6;
  int paraphrase_retry_budget = 3;
  int variant_retry_budget = 3;

  uint64_t seed = 42;

  // label options
  bool coerce_disjoint = true;
  int n_questions = 5;

  // decoding
  double qa_temperature = 0.0;
  double gen_temperature = 0.7;
  int qa_max_tokens = 256;
  int gen_max_tokens = 1024;
  double bench_temperature = 0.0;
  int bench_max_tokens = 1024;

  // split
  double train_ratio = 0.8;

  // embeddings
  std::string embeddings_mode = "file";  // file | http | none
  std::filesystem::path embeddings_path;
  std::string embeddings_endpoint;
  std::string embeddings_model = "all-MiniLM-L6-v2";
  size_t embeddings_dimension = 384;

  // training
  int cv_folds = 5;
  std::vector<classify::LogRegHyper> logreg_grid;
  std::vector<classify::ForestHyper> forest_grid;

  // benchmark
  std::string bench_split = "test";  // test | train | all

  int workers = 1;

  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);

  // validated snapshot of every field (the manifest form)
  nlohmann::json to_json() const;

  void validate() const;  // throws ConfigError

  genpipe::GenConfig gen_config() const;
  gateway::GatewayConfig gateway_config() const;

  // documented defaults used when the config omits the grids
  static std::vector<classify::LogRegHyper> default_logreg_grid();
  static std::vector<classify::ForestHyper> default_forest_grid();
};

}  // namespace scr
