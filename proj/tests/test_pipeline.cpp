#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scr/config.hpp"
#include "scr/embedding.hpp"
#include "scr/pipeline.hpp"
#include "scr/sha256.hpp"
#include "scr/text.hpp"
#include "support/fake_llm.hpp"

using namespace scr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    lines.push_back(json::parse(line));
  }
  return lines;
}

PipelineConfig base_config(const fs::path& corpus, const fs::path& cache, const fs::path& out,
                           const std::string& endpoint, const std::string& mode) {
  PipelineConfig cfg;
  cfg.corpus_path = corpus;
  cfg.cache_dir = cache;
  cfg.output_dir = out;
  cfg.endpoint = endpoint;
  cfg.mode = mode;
  cfg.n_questions = 6;
  cfg.embeddings_mode = "none";
  // one small grid point each keeps the integration run quick
  cfg.logreg_grid = {{0.1, 1e-3, 300}};
  classify::ForestHyper forest;
  forest.n_trees = 40;
  forest.max_depth = 10;
  cfg.forest_grid = {forest};
  return cfg;
}

void write_pair_embeddings(const fs::path& pairs_file, const fs::path& embeddings_file) {
  std::map<std::string, std::vector<double>> vectors;
  for (const auto& pair : read_jsonl(pairs_file)) {
    for (const char* key : {"text_a", "text_b"}) {
      std::string body = pair.at(key).get<std::string>();
      vectors[sha256_hex(body)] = scrtest::pseudo_embedding(body);
    }
  }
  embedding::write_embedding_file(embeddings_file, vectors);
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("config validation and json round-trip") {
  PipelineConfig cfg;
  cfg.meteor_gate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.meteor_gate = 0.6;
  cfg.mode = "offline";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.mode = "replay";
  cfg.n_questions = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n_questions = 5;
  cfg.logreg_grid = PipelineConfig::default_logreg_grid();
  cfg.forest_grid = PipelineConfig::default_forest_grid();
  cfg.validate();

  auto round = PipelineConfig::from_json(cfg.to_json());
  CHECK(round.to_json() == cfg.to_json());

  auto dir = fresh_dir("scr_cfg_test");
  {
    std::ofstream out(dir / "config.json");
    out << R"({"thresholds": {"meteor_gate": 1.5}})";
  }
  CHECK_THROWS_AS(PipelineConfig::load(dir / "config.json"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::load(dir / "missing.json"), ConfigError);
}

TEST_CASE("stages require their upstream artifacts") {
  auto out = fresh_dir("scr_stage_order");
  PipelineConfig cfg;
  cfg.output_dir = out;
  cfg.n_questions = 6;
  try {
    pipeline::run_stage("split", cfg);
    FAIL("expected a stage error");
  } catch (const StageError& ex) {
    CHECK(std::string(ex.what()).find("pairs.jsonl") != std::string::npos);
    CHECK(std::string(ex.what()).find("pairs") != std::string::npos);
  }
}

TEST_CASE("output directory lock is exclusive") {
  auto out = fresh_dir("scr_lock_test");
  std::ofstream(out / ".scr.lock") << "";
  PipelineConfig cfg;
  cfg.output_dir = out;
  CHECK_THROWS_AS(pipeline::run_stage("split", cfg), StageError);
  fs::remove(out / ".scr.lock");
}

TEST_CASE("record-mode pipeline over the scripted model, then byte-identical replay") {
  auto corpus = fresh_dir("scr_pipe_corpus") / "squad.json";
  {
    std::ofstream out(corpus);
    out << scrtest::fixture_squad_json();
  }
  auto cache = fresh_dir("scr_pipe_cache");
  auto out_record = fresh_dir("scr_pipe_out_record");

  scrtest::FakeLlm llm(scrtest::fixture_sources());
  llm.start();

  auto cfg = base_config(corpus, cache, out_record, llm.chat_endpoint(), "record");
  cfg.workers = 2;  // concurrent sources share the gateway and the store
  for (const char* stage : {"filter", "paraphrase", "variants", "pairs", "split"}) {
    pipeline::run_stage(stage, cfg);
  }

  // two sources survive: the 5-question one is ineligible, the flubbed
  // one fails the QA gate
  auto filtered = read_jsonl(out_record / "filtered.jsonl");
  CHECK(filtered.size() == 2);
  auto manifest = json::parse(read_bytes(out_record / "manifest_filter.json"));
  CHECK(manifest.at("extra").at("loaded") == 4);
  CHECK(manifest.at("extra").at("eligible") == 3);
  CHECK(manifest.at("extra").at("kept") == 2);

  auto pairs = read_jsonl(out_record / "pairs.jsonl");
  CHECK(pairs.size() == 72);
  auto variants = read_jsonl(out_record / "variants.jsonl");
  CHECK(variants.size() == 24);

  // pairs.jsonl carries exactly the documented fields
  std::set<std::string> keys;
  for (const auto& [key, value] : pairs[0].items()) keys.insert(key);
  CHECK(keys == std::set<std::string>{"pair_id", "source_id", "text_a", "text_b", "label",
                                      "algebra_label", "agreement"});

  auto embeddings_file = fresh_dir("scr_pipe_emb") / "embeddings.jsonl";
  write_pair_embeddings(out_record / "pairs.jsonl", embeddings_file);
  cfg.embeddings_mode = "file";
  cfg.embeddings_path = embeddings_file;
  for (const char* stage : {"validate", "features", "train", "eval"}) {
    pipeline::run_stage(stage, cfg);
  }
  pipeline::run_stage("bench-llm", cfg, "zero_shot");
  int hits_after_first_run = llm.chat_hits();
  CHECK(hits_after_first_run > 0);

  auto validation = json::parse(read_bytes(out_record / "validation_report.json"));
  CHECK(validation.at("n_pairs") == 72);
  CHECK(validation.at("per_label").at("equivalence").at("rate").get<double>() == 1.0);
  CHECK(validation.at("per_label").at("inclusion").at("rate").get<double>() == 1.0);
  CHECK(validation.at("cosine_available") == true);

  // replay into separate directories: no network, identical bytes even
  // with different worker counts, and `all` equals the composition
  auto run_replay = [&](const fs::path& out_dir, int workers, bool use_all) {
    auto replay_cfg = base_config(corpus, cache, out_dir, "", "replay");
    replay_cfg.embeddings_mode = "file";
    replay_cfg.embeddings_path = embeddings_file;
    replay_cfg.workers = workers;
    if (use_all) {
      pipeline::run_stage("all", replay_cfg);
    } else {
      for (const char* stage :
           {"filter", "paraphrase", "variants", "pairs", "split", "validate", "features",
            "train", "eval"}) {
        pipeline::run_stage(stage, replay_cfg);
      }
    }
    pipeline::run_stage("bench-llm", replay_cfg, "zero_shot");
  };
  auto out_a = fresh_dir("scr_pipe_out_replay_a");
  auto out_b = fresh_dir("scr_pipe_out_replay_b");
  run_replay(out_a, 1, /*use_all=*/false);
  run_replay(out_b, 3, /*use_all=*/true);
  CHECK(llm.chat_hits() == hits_after_first_run);  // replay never touched the network
  llm.stop();

  const char* artifacts[] = {"contexts.jsonl",  "filtered.jsonl",  "paraphrases.jsonl",
                             "variants.jsonl",  "pairs.jsonl",
                             "splits.json",     "validation_report.json",
                             "features.csv",    "models/logreg.json",
                             "models/forest.json", "models/cv_results.json",
                             "eval/logreg.json", "eval/forest.json",
                             "eval/majority.json", "bench/zero_shot.json",
                             "bench/zero_shot_pairs.csv"};
  for (const char* name : artifacts) {
    CHECK_MESSAGE(read_bytes(out_a / name) == read_bytes(out_b / name), name);
  }
  // replay reproduces the record run's artifacts too
  for (const char* name : {"pairs.jsonl", "splits.json", "features.csv",
                           "validation_report.json", "eval/majority.json"}) {
    CHECK_MESSAGE(read_bytes(out_record / name) == read_bytes(out_a / name), name);
  }

  // rerunning a stage in place leaves manifest and artifact bytes unchanged
  std::string split_manifest = read_bytes(out_a / "manifest_split.json");
  std::string splits_before = read_bytes(out_a / "splits.json");
  auto rerun_cfg = base_config(corpus, cache, out_a, "", "replay");
  rerun_cfg.embeddings_mode = "file";
  rerun_cfg.embeddings_path = embeddings_file;
  pipeline::run_stage("split", rerun_cfg);
  CHECK(read_bytes(out_a / "manifest_split.json") == split_manifest);
  CHECK(read_bytes(out_a / "splits.json") == splits_before);
}

TEST_CASE("a paraphrase that parrots the source exhausts its retries") {
  auto corpus = fresh_dir("scr_echo_corpus") / "squad.json";
  {
    std::ofstream out(corpus);
    out << scrtest::fixture_squad_json();
  }
  auto cache = fresh_dir("scr_echo_cache");
  auto out_dir = fresh_dir("scr_echo_out");

  scrtest::FakeBehavior behavior;
  behavior.echo_stitch = true;  // METEOR gate rejects every candidate
  scrtest::FakeLlm llm(scrtest::fixture_sources(), behavior);
  llm.start();

  auto cfg = base_config(corpus, cache, out_dir, llm.chat_endpoint(), "record");
  pipeline::run_stage("filter", cfg);
  pipeline::run_stage("paraphrase", cfg);
  llm.stop();

  CHECK(read_jsonl(out_dir / "paraphrases.jsonl").empty());
  auto manifest = json::parse(read_bytes(out_dir / "manifest_paraphrase.json"));
  REQUIRE(manifest.at("extra").at("diagnostics").size() == 2);
  std::string diagnostic = manifest.at("extra").at("diagnostics").at(0).get<std::string>();
  CHECK(diagnostic.find("exhausted") != std::string::npos);
}

TEST_CASE("a source whose variants cannot be built is dropped whole") {
  // two facts share one sentence, so neither prompt-based removal (the
  // scripted model deletes whole sentences) nor the sentence-deletion
  // fallback can remove one without the other
  scrtest::FakeSource tangled;
  tangled.title = "Twin Records";
  tangled.neutral_sentence = "The archive closes on winter Sundays.";
  const std::string shared =
      "The twin records note both the founding year 1710 and the founder Ames Holt.";
  tangled.facts = {
      {"tw-q1", "In which year was the archive founded?", "1710", shared,
       "It was founded in 1710.", "The founding happened back in 1710."},
      {"tw-q2", "Who founded the archive?", "Ames Holt", shared,
       "Ames Holt founded it.", "Ames Holt established the archive."},
      {"tw-q3", "Which street holds the archive?", "Dray Lane",
       "The archive stands on Dray Lane.", "It stands on Dray Lane.",
       "Dray Lane is home to the archive."},
      {"tw-q4", "How many shelves does it keep?", "900 shelves",
       "Inside are 900 shelves of ledgers.", "It keeps 900 shelves.",
       "Some 900 shelves of ledgers fill the rooms."},
      {"tw-q5", "What color is the reading room?", "pale green",
       "The reading room is painted pale green.", "It is pale green.",
       "A pale green wash covers the reading room."},
      {"tw-q6", "Which river is visible from the windows?", "River Nock",
       "Windows look over the River Nock.", "The River Nock is visible.",
       "The River Nock flows past the windows."},
  };

  auto sources = scrtest::fixture_sources();
  sources.push_back(tangled);
  auto corpus = fresh_dir("scr_tangle_corpus") / "squad.json";
  {
    // corpus containing only the tangled source plus one good one
    scrtest::FakeSource good = sources[0];
    json data = json::array();
    for (const auto& source : {good, tangled}) {
      json qas = json::array();
      for (const auto& fact : source.facts) {
        qas.push_back({{"id", fact.question_id},
                       {"question", fact.question},
                       {"answers", json::array({{{"text", fact.gold}, {"answer_start", 0}}})}});
      }
      data.push_back({{"title", source.title},
                      {"paragraphs",
                       json::array({{{"context", source.passage()}, {"qas", qas}}})}});
    }
    std::ofstream out(corpus);
    out << json{{"version", "1.1"}, {"data", data}}.dump();
  }

  scrtest::FakeLlm llm(sources);
  llm.start();
  auto cache = fresh_dir("scr_tangle_cache");
  auto out_dir = fresh_dir("scr_tangle_out");
  auto cfg = base_config(corpus, cache, out_dir, llm.chat_endpoint(), "record");
  for (const char* stage : {"filter", "paraphrase", "variants", "pairs"}) {
    pipeline::run_stage(stage, cfg);
  }
  llm.stop();

  CHECK(read_jsonl(out_dir / "paraphrases.jsonl").size() == 2);
  // no partial bundles: the tangled source contributes nothing
  CHECK(read_jsonl(out_dir / "variants.jsonl").size() == 12);
  CHECK(read_jsonl(out_dir / "pairs.jsonl").size() == 36);
  auto manifest = json::parse(read_bytes(out_dir / "manifest_variants.json"));
  REQUIRE(manifest.at("extra").at("diagnostics").size() == 1);
  CHECK(manifest.at("extra").at("diagnostics").at(0).get<std::string>().find("failed after") !=
        std::string::npos);
}

TEST_CASE("http embedding provider round-trips vectors from the endpoint") {
  scrtest::FakeLlm llm(scrtest::fixture_sources());
  llm.start();
  embedding::HttpEmbeddingConfig cfg;
  cfg.endpoint = llm.embeddings_endpoint();
  cfg.dimension = 384;
  embedding::HttpEmbeddingProvider provider(cfg);
  auto vec = provider.embed("the harbor lantern");
  CHECK(vec.size() == 384);
  CHECK(vec == scrtest::pseudo_embedding("the harbor lantern"));
  llm.stop();
}

TEST_CASE("file embedding provider misses loudly and validates dimensions") {
  auto dir = fresh_dir("scr_embed_file");
  std::map<std::string, std::vector<double>> vectors;
  vectors[sha256_hex("known text")] = std::vector<double>(16, 0.5);
  embedding::write_embedding_file(dir / "embeddings.jsonl", vectors);

  embedding::FileEmbeddingProvider provider(dir / "embeddings.jsonl");
  CHECK(provider.dimension() == 16);
  CHECK(provider.embed("known text").size() == 16);
  CHECK_THROWS_AS(provider.embed("unknown text"), embedding::ProviderError);
  CHECK_THROWS_AS(embedding::FileEmbeddingProvider(dir / "missing.jsonl"),
                  embedding::ProviderError);
}

TEST_SUITE_END();
