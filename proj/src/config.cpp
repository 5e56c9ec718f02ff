#include "scr/config.hpp"

#include <fstream>

namespace scr {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("config field '") + key + "': " + ex.what());
    }
  }
}

void read_path(const json& j, const char* key, std::filesystem::path& out) {
  std::string s = out.string();
  read_field(j, key, s);
  out = s;
}

}  // namespace

std::vector<classify::LogRegHyper> PipelineConfig::default_logreg_grid() {
  std::vector<classify::LogRegHyper> grid;
  for (double lr : {0.03, 0.1, 0.3}) {
    for (double l2 : {1e-4, 1e-3, 1e-2}) {
      grid.push_back({lr, l2, 500});
    }
  }
  return grid;
}

std::vector<classify::ForestHyper> PipelineConfig::default_forest_grid() {
  std::vector<classify::ForestHyper> grid;
  for (int n_trees : {100, 200}) {
    for (int max_depth : {8, 12}) {
      classify::ForestHyper hp;
      hp.n_trees = n_trees;
      hp.max_depth = max_depth;
      grid.push_back(hp);
    }
  }
  return grid;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("config root must be a JSON object");
  }
  PipelineConfig cfg;

  if (j.contains("paths")) {
    const auto& paths = j.at("paths");
    read_path(paths, "corpus", cfg.corpus_path);
    read_path(paths, "cache_dir", cfg.cache_dir);
    read_path(paths, "output_dir", cfg.output_dir);
    read_path(paths, "prompts_dir", cfg.prompts_dir);
  }
  if (j.contains("gateway")) {
    const auto& gw = j.at("gateway");
    read_field(gw, "endpoint", cfg.endpoint);
    read_field(gw, "model_id", cfg.model_id);
    read_field(gw, "mode", cfg.mode);
    read_field(gw, "api_key_env", cfg.api_key_env);
    read_field(gw, "max_in_flight", cfg.max_in_flight);
    read_field(gw, "max_attempts", cfg.max_attempts);
    read_field(gw, "backoff_base_ms", cfg.backoff_base_ms);
    read_field(gw, "backoff_cap_ms", cfg.backoff_cap_ms);
    read_field(gw, "timeout_ms", cfg.timeout_ms);
  }
  if (j.contains("thresholds")) {
    const auto& th = j.at("thresholds");
    read_field(th, "meteor_gate", cfg.meteor_gate);
    read_field(th, "paraphrase_retry_budget", cfg.paraphrase_retry_budget);
    read_field(th, "variant_retry_budget", cfg.variant_retry_budget);
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      throw ConfigError("seed must be a non-negative integer");
    }
    cfg.seed = j.at("seed").get<uint64_t>();
  }
  if (j.contains("labels")) {
    const auto& labels = j.at("labels");
    read_field(labels, "coerce_disjoint", cfg.coerce_disjoint);
    read_field(labels, "n_questions", cfg.n_questions);
  }
  if (j.contains("decoding")) {
    const auto& d = j.at("decoding");
    read_field(d, "qa_temperature", cfg.qa_temperature);
    read_field(d, "gen_temperature", cfg.gen_temperature);
    read_field(d, "qa_max_tokens", cfg.qa_max_tokens);
    read_field(d, "gen_max_tokens", cfg.gen_max_tokens);
    read_field(d, "bench_temperature", cfg.bench_temperature);
    read_field(d, "bench_max_tokens", cfg.bench_max_tokens);
  }
  if (j.contains("split")) {
    read_field(j.at("split"), "train_ratio", cfg.train_ratio);
  }
  if (j.contains("embeddings")) {
    const auto& emb = j.at("embeddings");
    read_field(emb, "mode", cfg.embeddings_mode);
    read_path(emb, "path", cfg.embeddings_path);
    read_field(emb, "endpoint", cfg.embeddings_endpoint);
    read_field(emb, "model_id", cfg.embeddings_model);
    read_field(emb, "dimension", cfg.embeddings_dimension);
  }
  if (j.contains("train")) {
    const auto& train = j.at("train");
    read_field(train, "cv_folds", cfg.cv_folds);
    if (train.contains("logreg_grid")) {
      cfg.logreg_grid.clear();
      for (const auto& point : train.at("logreg_grid")) {
        classify::LogRegHyper hp;
        read_field(point, "learning_rate", hp.learning_rate);
        read_field(point, "l2", hp.l2);
        read_field(point, "epochs", hp.epochs);
        cfg.logreg_grid.push_back(hp);
      }
    }
    if (train.contains("forest_grid")) {
      cfg.forest_grid.clear();
      for (const auto& point : train.at("forest_grid")) {
        classify::ForestHyper hp;
        read_field(point, "n_trees", hp.n_trees);
        read_field(point, "max_depth", hp.max_depth);
        read_field(point, "min_samples_split", hp.min_samples_split);
        read_field(point, "features_per_split", hp.features_per_split);
        read_field(point, "bootstrap", hp.bootstrap);
        cfg.forest_grid.push_back(hp);
      }
    }
  }
  if (j.contains("bench")) {
    read_field(j.at("bench"), "split", cfg.bench_split);
  }
  read_field(j, "workers", cfg.workers);

  if (cfg.logreg_grid.empty()) cfg.logreg_grid = default_logreg_grid();
  if (cfg.forest_grid.empty()) cfg.forest_grid = default_forest_grid();
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw ConfigError("config parse error in " + path.string() + ": " + ex.what());
  }
  return from_json(j);
}

void PipelineConfig::validate() const {
  if (meteor_gate <= 0.0 || meteor_gate >= 1.0) {
    throw ConfigError("meteor_gate must be in (0,1), got " + std::to_string(meteor_gate));
  }
  gateway::mode_from_string(mode);  // throws on bad mode
  if (train_ratio <= 0.0 || train_ratio >= 1.0) {
    throw ConfigError("train_ratio must be in (0,1)");
  }
  if (n_questions < 5) {
    throw ConfigError("n_questions must be >= 5 (the removal-pattern family needs 5)");
  }
  if (paraphrase_retry_budget < 1 || variant_retry_budget < 1) {
    throw ConfigError("retry budgets must be >= 1");
  }
  if (qa_temperature < 0.0 || gen_temperature < 0.0 || bench_temperature < 0.0) {
    throw ConfigError("temperatures must be >= 0");
  }
  if (qa_max_tokens < 1 || gen_max_tokens < 1 || bench_max_tokens < 1) {
    throw ConfigError("max_tokens must be positive");
  }
  if (embeddings_mode != "file" && embeddings_mode != "http" && embeddings_mode != "none") {
    throw ConfigError("embeddings mode must be file|http|none");
  }
  if (embeddings_dimension < 10) {
    throw ConfigError("embeddings dimension must be >= 10 (feature schema uses 10 dims/side)");
  }
  if (cv_folds < 2) {
    throw ConfigError("cv_folds must be >= 2");
  }
  if (workers < 1) {
    throw ConfigError("workers must be >= 1");
  }
  if (max_in_flight < 1) {
    throw ConfigError("max_in_flight must be >= 1");
  }
  if (bench_split != "test" && bench_split != "train" && bench_split != "all") {
    throw ConfigError("bench split must be test|train|all");
  }
}

nlohmann::json PipelineConfig::to_json() const {
  json logreg = json::array();
  for (const auto& hp : logreg_grid) {
    logreg.push_back(
        {{"learning_rate", hp.learning_rate}, {"l2", hp.l2}, {"epochs", hp.epochs}});
  }
  json forest = json::array();
  for (const auto& hp : forest_grid) {
    forest.push_back({{"n_trees", hp.n_trees},
                      {"max_depth", hp.max_depth},
                      {"min_samples_split", hp.min_samples_split},
                      {"features_per_split", hp.features_per_split},
                      {"bootstrap", hp.bootstrap}});
  }
  return {{"paths",
           {{"corpus", corpus_path.string()},
            {"cache_dir", cache_dir.string()},
            {"output_dir", output_dir.string()},
            {"prompts_dir", prompts_dir.string()}}},
          {"gateway",
           {{"endpoint", endpoint},
            {"model_id", model_id},
            {"mode", mode},
            {"api_key_env", api_key_env},
            {"max_in_flight", max_in_flight},
            {"max_attempts", max_attempts},
            {"backoff_base_ms", backoff_base_ms},
            {"backoff_cap_ms", backoff_cap_ms},
            {"timeout_ms", timeout_ms}}},
          {"thresholds",
           {{"meteor_gate", meteor_gate},
            {"paraphrase_retry_budget", paraphrase_retry_budget},
            {"variant_retry_budget", variant_retry_budget}}},
          {"seed", seed},
          {"labels", {{"coerce_disjoint", coerce_disjoint}, {"n_questions", n_questions}}},
          {"decoding",
           {{"qa_temperature", qa_temperature},
            {"gen_temperature", gen_temperature},
            {"qa_max_tokens", qa_max_tokens},
            {"gen_max_tokens", gen_max_tokens},
            {"bench_temperature", bench_temperature},
            {"bench_max_tokens", bench_max_tokens}}},
          {"split", {{"train_ratio", train_ratio}}},
          {"embeddings",
           {{"mode", embeddings_mode},
            {"path", embeddings_path.string()},
            {"endpoint", embeddings_endpoint},
            {"model_id", embeddings_model},
            {"dimension", embeddings_dimension}}},
          {"train", {{"cv_folds", cv_folds}, {"logreg_grid", logreg}, {"forest_grid", forest}}},
          {"bench", {{"split", bench_split}}},
          {"workers", workers}};
}

genpipe::GenConfig PipelineConfig::gen_config() const {
  genpipe::GenConfig gen;
  gen.model_id = model_id;
  gen.qa_temperature = qa_temperature;
  gen.gen_temperature = gen_temperature;
  gen.qa_max_tokens = qa_max_tokens;
  gen.gen_max_tokens = gen_max_tokens;
  gen.meteor_gate = meteor_gate;
  gen.paraphrase_retry_budget = paraphrase_retry_budget;
  gen.variant_retry_budget = variant_retry_budget;
  gen.coerce_disjoint = coerce_disjoint;
  gen.n_questions = n_questions;
  return gen;
}

gateway::GatewayConfig PipelineConfig::gateway_config() const {
  gateway::GatewayConfig gw;
  gw.endpoint = endpoint;
  gw.model_id = model_id;
  gw.mode = gateway::mode_from_string(mode);
  gw.cache_dir = cache_dir;
  gw.api_key_env = api_key_env;
  gw.max_attempts = max_attempts;
  gw.backoff_base = std::chrono::milliseconds(backoff_base_ms);
  gw.backoff_cap = std::chrono::milliseconds(backoff_cap_ms);
  gw.timeout = std::chrono::milliseconds(timeout_ms);
  gw.max_in_flight = max_in_flight;
  gw.jitter_seed = seed;
  return gw;
}

}  // namespace scr
