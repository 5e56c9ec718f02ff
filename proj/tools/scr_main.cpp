#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scr/config.hpp"
#include "scr/pipeline.hpp"

namespace {

struct CliOverrides {
  std::optional<std::string> corpus, cache_dir, output_dir, prompts_dir;
  std::optional<std::string> endpoint, model_id, mode, embeddings_mode, embeddings_path;
  std::optional<std::string> bench_split;
  std::optional<double> meteor_gate, train_ratio;
  std::optional<uint64_t> seed;
  std::optional<int> n_questions, workers;
  std::optional<bool> coerce_disjoint;
};

void apply(const CliOverrides& o, scr::PipelineConfig& cfg) {
  if (o.corpus) cfg.corpus_path = *o.corpus;
  if (o.cache_dir) cfg.cache_dir = *o.cache_dir;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.prompts_dir) cfg.prompts_dir = *o.prompts_dir;
  if (o.endpoint) cfg.endpoint = *o.endpoint;
  if (o.model_id) cfg.model_id = *o.model_id;
  if (o.mode) cfg.mode = *o.mode;
  if (o.embeddings_mode) cfg.embeddings_mode = *o.embeddings_mode;
  if (o.embeddings_path) cfg.embeddings_path = *o.embeddings_path;
  if (o.bench_split) cfg.bench_split = *o.bench_split;
  if (o.meteor_gate) cfg.meteor_gate = *o.meteor_gate;
  if (o.train_ratio) cfg.train_ratio = *o.train_ratio;
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_questions) cfg.n_questions = *o.n_questions;
  if (o.workers) cfg.workers = *o.workers;
  if (o.coerce_disjoint) cfg.coerce_disjoint = *o.coerce_disjoint;
  cfg.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "scr: semantic coverage relation pipeline (dataset generation, validation,\n"
      "feature extraction, classifier training, and prompted-model benchmarking)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string bench_mode = "zero_shot";
  CliOverrides overrides;

  app.add_option("-c,--config", config_path, "Pipeline config file (JSON)");
  app.add_option("--corpus", overrides.corpus, "SQuAD-format corpus file");
  app.add_option("--cache-dir", overrides.cache_dir, "Transcript cache directory");
  app.add_option("--output-dir", overrides.output_dir, "Artifact output directory");
  app.add_option("--prompts-dir", overrides.prompts_dir, "Prompt data directory override");
  app.add_option("--endpoint", overrides.endpoint, "Chat-completion endpoint URL");
  app.add_option("--model-id", overrides.model_id, "Completion model identifier");
  app.add_option("--mode", overrides.mode, "Gateway mode: live|record|replay");
  app.add_option("--embeddings-mode", overrides.embeddings_mode,
                 "Embedding provider: file|http|none");
  app.add_option("--embeddings-path", overrides.embeddings_path,
                 "Precomputed embedding file (file mode)");
  app.add_option("--meteor-gate", overrides.meteor_gate, "Paraphrase METEOR acceptance gate");
  app.add_option("--train-ratio", overrides.train_ratio, "Train fraction for the split");
  app.add_option("--seed", overrides.seed, "Pipeline seed");
  app.add_option("--n-questions", overrides.n_questions, "Designated questions per source");
  app.add_option("--workers", overrides.workers, "Concurrent workers");
  app.add_flag("--coerce-disjoint,!--strict-disjoint", overrides.coerce_disjoint,
               "Report disjoint answerable sets as semantic overlap (default on)");
  app.add_option("--bench-split", overrides.bench_split, "Benchmark over test|train|all pairs");

  for (const auto& stage : scr::pipeline::stage_names()) {
    auto* sub = app.add_subcommand(stage, stage == "all"
                                              ? "Run filter through eval in sequence"
                                              : "Run the '" + stage + "' stage");
    if (stage == "bench-llm") {
      sub->add_option("--bench-mode", bench_mode,
                      "Prompting mode: zero_shot|few_shot|zero_cot|few_cot");
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    scr::PipelineConfig cfg;
    if (!config_path.empty()) {
      cfg = scr::PipelineConfig::load(config_path);
    }
    apply(overrides, cfg);
    const std::string stage = app.get_subcommands().front()->get_name();
    scr::pipeline::run_stage(stage, cfg, bench_mode);
    return 0;
  } catch (const scr::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
