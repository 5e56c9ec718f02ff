#include "scr/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "scr/answerability.hpp"
#include "scr/corpus.hpp"
#include "scr/evaluate.hpp"
#include "scr/genpipe.hpp"
#include "scr/lexfeat.hpp"
#include "scr/parallel.hpp"
#include "scr/sha256.hpp"
#include "scr/text.hpp"

namespace scr::pipeline {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// One pipeline command at a time per output directory.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir) : path_(dir / ".scr.lock") {
    std::filesystem::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw StageError("output directory is locked by another run (" + path_.string() +
                       " exists; remove it if the previous run crashed)");
    }
  }
  ~OutputLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::filesystem::remove(path_);
    }
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

struct StageIo {
  const PipelineConfig& cfg;
  std::string stage;
  std::map<std::string, std::string> input_hashes = {};

  std::filesystem::path out(const std::string& name) const { return cfg.output_dir / name; }

  std::filesystem::path require(const std::string& name, const std::string& producer) {
    auto path = out(name);
    if (!std::filesystem::exists(path)) {
      throw StageError("stage '" + stage + "' requires " + name + " (run '" + producer +
                       "' first)");
    }
    input_hashes[name] = sha256_hex(read_file_bytes(path));
    return path;
  }

  void note_external_input(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
      throw StageError("stage '" + stage + "': input file missing: " + path.string());
    }
    input_hashes[path.string()] = sha256_hex(read_file_bytes(path));
  }

  void write_manifest(const json& extra = json::object()) const {
    json manifest = {{"stage", stage},
                     {"config", cfg.to_json()},
                     {"inputs", input_hashes},
                     {"extra", extra}};
    std::ofstream out_file(out("manifest_" + stage + ".json"));
    out_file << manifest.dump(2) << "\n";
  }
};

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw StageError("cannot open " + path.string());
  }
  std::vector<json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    lines.push_back(json::parse(line));
  }
  return lines;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) {
    throw StageError("cannot write " + path.string());
  }
  for (const auto& line : lines) {
    out << line.dump() << "\n";
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) {
    throw StageError("cannot write " + path.string());
  }
  out << j.dump(2) << "\n";
}

prompts::PromptLibrary load_prompts(const PipelineConfig& cfg) {
  if (!cfg.prompts_dir.empty()) {
    return prompts::PromptLibrary::load(cfg.prompts_dir);
  }
  return prompts::PromptLibrary();
}

std::unique_ptr<gateway::LlmGateway> open_gateway(const PipelineConfig& cfg) {
  return std::make_unique<gateway::LlmGateway>(cfg.gateway_config());
}

std::unique_ptr<embedding::EmbeddingProvider> open_provider(const PipelineConfig& cfg,
                                                            bool required) {
  if (cfg.embeddings_mode == "file") {
    if (cfg.embeddings_path.empty()) {
      if (required) throw ConfigError("embeddings.path is required in file mode");
      return nullptr;
    }
    return embedding::make_file_provider(cfg.embeddings_path);
  }
  if (cfg.embeddings_mode == "http") {
    embedding::HttpEmbeddingConfig http;
    http.endpoint = cfg.embeddings_endpoint;
    http.model_id = cfg.embeddings_model;
    http.dimension = cfg.embeddings_dimension;
    http.api_key_env = cfg.api_key_env;
    return embedding::make_http_provider(http);
  }
  if (required) {
    throw ConfigError("stage requires an embedding provider; embeddings.mode is 'none'");
  }
  return nullptr;
}

// ---- stage implementations -------------------------------------------

void stage_filter(const PipelineConfig& cfg) {
  StageIo io{cfg, "filter"};
  if (cfg.corpus_path.empty()) {
    throw ConfigError("paths.corpus is required for the filter stage");
  }
  io.note_external_input(cfg.corpus_path);

  auto prompt_lib = load_prompts(cfg);
  auto gw = open_gateway(cfg);
  auto gen = cfg.gen_config();

  auto records = corpus::load_squad(cfg.corpus_path);
  auto eligible = corpus::eligible_contexts(records, cfg.n_questions);
  std::vector<corpus::ContextRecord> designated;
  for (const auto& record : eligible) {
    designated.push_back(corpus::select_questions(record, cfg.n_questions));
  }
  std::vector<std::string> diagnostics;
  auto kept = genpipe::filter_contexts(*gw, prompt_lib, gen, designated, &diagnostics);

  // canonical record interchange form, one ContextRecord per line
  std::vector<json> context_lines;
  for (const auto& record : designated) context_lines.push_back(corpus::to_json(record));
  write_jsonl(io.out("contexts.jsonl"), context_lines);

  std::vector<json> lines;
  for (const auto& record : kept) {
    auto references = genpipe::reference_answers(*gw, prompt_lib, gen, record);
    lines.push_back({{"record", corpus::to_json(record)}, {"references", references}});
  }
  write_jsonl(io.out("filtered.jsonl"), lines);
  io.write_manifest({{"loaded", records.size()},
                     {"eligible", eligible.size()},
                     {"kept", kept.size()},
                     {"diagnostics", diagnostics}});
  std::cerr << "filter: " << records.size() << " contexts, " << eligible.size() << " eligible, "
            << kept.size() << " passed the QA gate\n";
}

struct FilteredSource {
  corpus::ContextRecord record;
  std::map<std::string, std::string> references;
};

std::vector<FilteredSource> load_filtered(StageIo& io) {
  std::vector<FilteredSource> sources;
  for (const auto& line : read_jsonl(io.require("filtered.jsonl", "filter"))) {
    FilteredSource source;
    source.record = corpus::record_from_json(line.at("record"));
    source.references = line.at("references").get<std::map<std::string, std::string>>();
    sources.push_back(std::move(source));
  }
  return sources;
}

void stage_paraphrase(const PipelineConfig& cfg) {
  StageIo io{cfg, "paraphrase"};
  auto sources = load_filtered(io);
  auto prompt_lib = load_prompts(cfg);
  auto gw = open_gateway(cfg);
  auto gen = cfg.gen_config();

  std::vector<json> lines(sources.size());
  std::vector<std::string> diagnostics(sources.size());
  parallel_for(sources.size(), cfg.workers, [&](size_t i) {
    const auto& source = sources[i];
    try {
      std::string paraphrase =
          genpipe::generate_paraphrase(*gw, prompt_lib, gen, source.record, source.references);
      double score = lexfeat::meteor(paraphrase, source.record.passage, gen.meteor_params);
      lines[i] = {{"source_id", source.record.context_id},
                  {"paraphrase_text", paraphrase},
                  {"meteor", score}};
    } catch (const Error& ex) {
      diagnostics[i] = source.record.context_id + ": " + ex.what();
    }
  });

  std::vector<json> kept;
  std::vector<std::string> failures;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!diagnostics[i].empty()) {
      failures.push_back(diagnostics[i]);
    } else {
      kept.push_back(std::move(lines[i]));
    }
  }
  write_jsonl(io.out("paraphrases.jsonl"), kept);
  io.write_manifest({{"sources", sources.size()},
                     {"paraphrased", kept.size()},
                     {"diagnostics", failures}});
  std::cerr << "paraphrase: " << kept.size() << "/" << sources.size() << " sources\n";
}

void stage_variants(const PipelineConfig& cfg) {
  StageIo io{cfg, "variants"};
  auto sources = load_filtered(io);
  auto paraphrases = read_jsonl(io.require("paraphrases.jsonl", "paraphrase"));
  std::map<std::string, std::string> paraphrase_by_source;
  for (const auto& line : paraphrases) {
    paraphrase_by_source[line.at("source_id").get<std::string>()] =
        line.at("paraphrase_text").get<std::string>();
  }

  auto prompt_lib = load_prompts(cfg);
  auto gw = open_gateway(cfg);
  auto gen = cfg.gen_config();

  std::vector<std::vector<genpipe::TextVariant>> per_source(sources.size());
  std::vector<std::string> diagnostics(sources.size());
  parallel_for(sources.size(), cfg.workers, [&](size_t i) {
    const auto& source = sources[i];
    auto it = paraphrase_by_source.find(source.record.context_id);
    if (it == paraphrase_by_source.end()) return;  // dropped upstream
    try {
      std::vector<std::string> ids;
      for (const auto& item : source.record.questions) ids.push_back(item.question_id);
      auto patterns = genpipe::removal_patterns(ids, cfg.n_questions);
      per_source[i] = genpipe::make_variants(*gw, prompt_lib, gen, source.record, it->second,
                                             source.references, patterns);
    } catch (const Error& ex) {
      diagnostics[i] = source.record.context_id + ": " + ex.what();
      per_source[i].clear();  // sources fail whole
    }
  });

  std::vector<json> lines;
  std::vector<std::string> failures;
  size_t completed = 0;
  for (size_t i = 0; i < sources.size(); ++i) {
    if (!diagnostics[i].empty()) {
      failures.push_back(diagnostics[i]);
      continue;
    }
    if (per_source[i].empty()) continue;
    ++completed;
    for (const auto& variant : per_source[i]) {
      lines.push_back(genpipe::variant_to_json(variant));
    }
  }
  write_jsonl(io.out("variants.jsonl"), lines);
  io.write_manifest({{"sources", sources.size()},
                     {"completed", completed},
                     {"variants", lines.size()},
                     {"diagnostics", failures}});
  std::cerr << "variants: " << lines.size() << " variants from " << completed << " sources\n";
}

void stage_pairs(const PipelineConfig& cfg) {
  StageIo io{cfg, "pairs"};
  auto variant_lines = read_jsonl(io.require("variants.jsonl", "variants"));

  std::map<std::string, std::vector<genpipe::TextVariant>> by_source;
  for (const auto& line : variant_lines) {
    auto variant = genpipe::variant_from_json(line);
    by_source[variant.source_id].push_back(std::move(variant));
  }

  std::vector<json> lines;
  size_t sources = 0;
  for (const auto& [source_id, variants] : by_source) {
    if (variants.size() != 12) {
      throw StageError("source " + source_id + " has " + std::to_string(variants.size()) +
                       " variants, expected 12");
    }
    ++sources;
    for (const auto& pair : genpipe::generate_pairs(variants, cfg.coerce_disjoint)) {
      lines.push_back(genpipe::pair_to_json(pair));
    }
  }
  write_jsonl(io.out("pairs.jsonl"), lines);
  io.write_manifest({{"sources", sources}, {"pairs", lines.size()}});
  std::cerr << "pairs: " << lines.size() << " pairs from " << sources << " sources\n";
}

std::vector<genpipe::LabeledPair> load_pairs(StageIo& io) {
  std::vector<genpipe::LabeledPair> pairs;
  for (const auto& line : read_jsonl(io.require("pairs.jsonl", "pairs"))) {
    pairs.push_back(genpipe::pair_from_json(line));
  }
  return pairs;
}

void stage_split(const PipelineConfig& cfg) {
  StageIo io{cfg, "split"};
  auto pairs = load_pairs(io);
  std::vector<std::pair<std::string, answerability::RelationClass>> labeled;
  for (const auto& pair : pairs) {
    labeled.emplace_back(pair.pair_id, pair.relation_class());
  }
  auto split = genpipe::split_dataset(labeled, cfg.train_ratio, cfg.seed);
  write_json_file(io.out("splits.json"), {{"seed", cfg.seed},
                                          {"train_ratio", cfg.train_ratio},
                                          {"train", split.train_ids},
                                          {"test", split.test_ids}});
  io.write_manifest({{"train", split.train_ids.size()}, {"test", split.test_ids.size()}});
  std::cerr << "split: " << split.train_ids.size() << " train / " << split.test_ids.size()
            << " test\n";
}

void stage_validate(const PipelineConfig& cfg) {
  StageIo io{cfg, "validate"};
  auto sources = load_filtered(io);
  auto paraphrases = read_jsonl(io.require("paraphrases.jsonl", "paraphrase"));
  auto variant_lines = read_jsonl(io.require("variants.jsonl", "variants"));
  auto pairs = load_pairs(io);

  std::map<std::string, genpipe::SourceBundle> bundles;
  for (const auto& source : sources) {
    genpipe::SourceBundle bundle;
    bundle.context = source.record;
    bundle.references = source.references;
    bundles[source.record.context_id] = std::move(bundle);
  }
  for (const auto& line : paraphrases) {
    auto it = bundles.find(line.at("source_id").get<std::string>());
    if (it == bundles.end()) continue;
    it->second.paraphrase_text = line.at("paraphrase_text").get<std::string>();
    it->second.paraphrase_meteor = line.at("meteor").get<double>();
  }
  for (const auto& line : variant_lines) {
    auto variant = genpipe::variant_from_json(line);
    auto it = bundles.find(variant.source_id);
    if (it != bundles.end()) it->second.variants.push_back(std::move(variant));
  }
  for (auto& pair : pairs) {
    auto it = bundles.find(pair.source_id);
    if (it != bundles.end()) it->second.pairs.push_back(std::move(pair));
  }

  std::vector<genpipe::SourceBundle> complete;
  for (auto& [source_id, bundle] : bundles) {
    if (bundle.variants.size() == 12 && bundle.pairs.size() == 36) {
      complete.push_back(std::move(bundle));
    }
  }
  auto provider = open_provider(cfg, /*required=*/false);
  auto report = genpipe::validate_dataset(complete, cfg.gen_config(), provider.get());
  write_json_file(io.out("validation_report.json"), report);
  io.write_manifest({{"sources", complete.size()},
                     {"agreement_rate", report.at("agreement_rate")}});
  std::cerr << "validate: agreement rate " << report.at("agreement_rate") << " over "
            << complete.size() << " sources\n";
}

void stage_features(const PipelineConfig& cfg) {
  StageIo io{cfg, "features"};
  auto pairs = load_pairs(io);
  auto provider = open_provider(cfg, /*required=*/true);

  std::vector<std::string> rows(pairs.size());
  parallel_for(pairs.size(), cfg.workers, [&](size_t i) {
    const auto& pair = pairs[i];
    lexfeat::FeatureVector fv;
    try {
      fv = lexfeat::extract_features(pair.text_a, pair.text_b, provider->embed(pair.text_a),
                                     provider->embed(pair.text_b));
    } catch (const Error& ex) {
      throw Error("pair " + pair.pair_id + ": " + ex.what());
    }
    std::string row = pair.pair_id + "," + answerability::to_string(pair.relation_class());
    for (double v : fv.values) {
      row += ",";
      row += format_double(v);
    }
    rows[i] = std::move(row);
  });

  std::ofstream out(io.out("features.csv"));
  if (!out) {
    throw StageError("cannot write features.csv");
  }
  out << "# schema_version=" << lexfeat::kFeatureSchemaVersion << "\n";
  out << "pair_id,label";
  for (const auto& name : lexfeat::feature_names()) out << "," << name;
  out << "\n";
  for (const auto& row : rows) out << row << "\n";
  out.close();
  io.write_manifest({{"pairs", pairs.size()}});
  std::cerr << "features: " << pairs.size() << " vectors\n";
}

struct FeatureTable {
  std::vector<std::string> pair_ids;
  std::vector<int> labels;
  classify::Matrix X;
};

FeatureTable read_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw StageError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("# schema_version=", 0) != 0 ||
      line.substr(17) != lexfeat::kFeatureSchemaVersion) {
    throw StageError("features.csv has an unexpected schema_version header");
  }
  std::getline(in, line);  // column header
  std::vector<std::vector<double>> values;
  FeatureTable table;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 2 + static_cast<size_t>(lexfeat::kFeatureDim)) {
      throw StageError("features.csv row has " + std::to_string(cells.size()) + " cells");
    }
    table.pair_ids.push_back(cells[0]);
    table.labels.push_back(
        static_cast<int>(answerability::class_from_string(cells[1])));
    std::vector<double> row(lexfeat::kFeatureDim);
    for (int d = 0; d < lexfeat::kFeatureDim; ++d) row[d] = std::stod(cells[2 + d]);
    values.push_back(std::move(row));
  }
  table.X = classify::Matrix(values.size(), lexfeat::kFeatureDim);
  for (size_t r = 0; r < values.size(); ++r) {
    for (int d = 0; d < lexfeat::kFeatureDim; ++d) table.X.at(r, d) = values[r][d];
  }
  return table;
}

struct SplitTables {
  FeatureTable train;
  FeatureTable test;
};

SplitTables split_features(const FeatureTable& table, const json& splits) {
  std::map<std::string, int> membership;  // 0 = train, 1 = test
  for (const auto& id : splits.at("train")) membership[id.get<std::string>()] = 0;
  for (const auto& id : splits.at("test")) membership[id.get<std::string>()] = 1;

  SplitTables out;
  std::array<std::vector<size_t>, 2> rows;
  for (size_t i = 0; i < table.pair_ids.size(); ++i) {
    auto it = membership.find(table.pair_ids[i]);
    if (it == membership.end()) {
      throw StageError("pair " + table.pair_ids[i] + " missing from splits.json");
    }
    rows[it->second].push_back(i);
  }
  for (int part = 0; part < 2; ++part) {
    FeatureTable& target = part == 0 ? out.train : out.test;
    target.X = classify::Matrix(rows[part].size(), table.X.cols);
    for (size_t i = 0; i < rows[part].size(); ++i) {
      size_t src = rows[part][i];
      target.pair_ids.push_back(table.pair_ids[src]);
      target.labels.push_back(table.labels[src]);
      for (size_t c = 0; c < table.X.cols; ++c) target.X.at(i, c) = table.X.at(src, c);
    }
  }
  return out;
}

void stage_train(const PipelineConfig& cfg) {
  StageIo io{cfg, "train"};
  auto table = read_features(io.require("features.csv", "features"));
  json splits = json::parse(read_file_bytes(io.require("splits.json", "split")));
  auto tables = split_features(table, splits);

  // logistic regression grid
  classify::TrainPredictFn logreg_fn = [&](const classify::Matrix& train_X,
                                           const std::vector<int>& train_y,
                                           const classify::Matrix& eval_X, size_t cand) {
    auto model = classify::train_logreg(train_X, train_y, cfg.logreg_grid[cand]);
    return classify::predict(model, eval_X);
  };
  auto logreg_cv = classify::cross_validate(tables.train.X, tables.train.labels,
                                            cfg.logreg_grid.size(), logreg_fn, cfg.cv_folds,
                                            cfg.seed);
  auto logreg_model =
      classify::train_logreg(tables.train.X, tables.train.labels,
                             cfg.logreg_grid[logreg_cv.best_index]);

  // forest grid; per-tree randomness derives from the pipeline seed
  auto forest_grid = cfg.forest_grid;
  for (auto& hp : forest_grid) {
    hp.master_seed = cfg.seed;
    hp.workers = cfg.workers;
  }
  classify::TrainPredictFn forest_fn = [&](const classify::Matrix& train_X,
                                           const std::vector<int>& train_y,
                                           const classify::Matrix& eval_X, size_t cand) {
    auto model = classify::train_rf(train_X, train_y, forest_grid[cand]);
    return classify::predict(model, eval_X);
  };
  auto forest_cv = classify::cross_validate(tables.train.X, tables.train.labels,
                                            forest_grid.size(), forest_fn, cfg.cv_folds,
                                            cfg.seed);
  auto forest_model =
      classify::train_rf(tables.train.X, tables.train.labels, forest_grid[forest_cv.best_index]);

  write_json_file(io.out("models/logreg.json"), classify::to_json(logreg_model));
  write_json_file(io.out("models/forest.json"), classify::to_json(forest_model));
  write_json_file(io.out("models/cv_results.json"),
                  {{"logreg",
                    {{"best_index", logreg_cv.best_index},
                     {"mean_macro_f1", logreg_cv.mean_scores},
                     {"fold_macro_f1", logreg_cv.fold_scores}}},
                   {"forest",
                    {{"best_index", forest_cv.best_index},
                     {"mean_macro_f1", forest_cv.mean_scores},
                     {"fold_macro_f1", forest_cv.fold_scores}}}});
  io.write_manifest({{"train_rows", tables.train.pair_ids.size()},
                     {"logreg_best", logreg_cv.best_index},
                     {"forest_best", forest_cv.best_index}});
  std::cerr << "train: logreg grid point " << logreg_cv.best_index << ", forest grid point "
            << forest_cv.best_index << "\n";
}

json eval_model_report(const std::string& name, const std::vector<int>& truths,
                       const std::vector<int>& predictions, uint64_t seed) {
  auto report =
      evaluate::classification_metrics(evaluate::confusion_matrix(truths, predictions));
  report.metadata = {{"model", name}, {"seed", seed}};
  return evaluate::report_to_json(report);
}

void stage_eval(const PipelineConfig& cfg) {
  StageIo io{cfg, "eval"};
  auto table = read_features(io.require("features.csv", "features"));
  json splits = json::parse(read_file_bytes(io.require("splits.json", "split")));
  auto tables = split_features(table, splits);
  auto logreg_model = classify::logreg_from_json(
      json::parse(read_file_bytes(io.require("models/logreg.json", "train"))));
  auto forest_model = classify::forest_from_json(
      json::parse(read_file_bytes(io.require("models/forest.json", "train"))));

  auto logreg_pred = classify::predict(logreg_model, tables.test.X);
  auto forest_pred = classify::predict(forest_model, tables.test.X);

  write_json_file(io.out("eval/logreg.json"),
                  eval_model_report("logistic_regression", tables.test.labels, logreg_pred,
                                    cfg.seed));
  write_json_file(io.out("eval/forest.json"),
                  eval_model_report("random_forest", tables.test.labels, forest_pred, cfg.seed));
  auto majority = evaluate::majority_baseline(tables.test.labels);
  majority.metadata["seed"] = cfg.seed;
  write_json_file(io.out("eval/majority.json"), evaluate::report_to_json(majority));

  auto write_matrix = [&](const std::string& name, const std::vector<int>& pred) {
    std::ofstream out(io.out("eval/" + name + "_confusion.txt"));
    out << evaluate::matrix_to_text(evaluate::confusion_matrix(tables.test.labels, pred));
  };
  write_matrix("logreg", logreg_pred);
  write_matrix("forest", forest_pred);

  io.write_manifest({{"test_rows", tables.test.pair_ids.size()}});
  std::cerr << "eval: reports for logreg, forest, majority baseline ("
            << tables.test.pair_ids.size() << " test pairs)\n";
}

void stage_bench(const PipelineConfig& cfg, const std::string& mode_name) {
  StageIo io{cfg, "bench-" + mode_name};
  auto pairs = load_pairs(io);
  json splits = json::parse(read_file_bytes(io.require("splits.json", "split")));

  std::set<std::string> wanted;
  if (cfg.bench_split == "all") {
    for (const auto& pair : pairs) wanted.insert(pair.pair_id);
  } else {
    for (const auto& id : splits.at(cfg.bench_split)) wanted.insert(id.get<std::string>());
  }

  std::vector<evaluate::BenchPair> bench_pairs;
  for (const auto& pair : pairs) {
    if (!wanted.count(pair.pair_id)) continue;
    bench_pairs.push_back(
        {pair.pair_id, pair.text_a, pair.text_b, pair.relation_class()});
  }

  auto prompt_lib = load_prompts(cfg);
  auto gw = open_gateway(cfg);
  evaluate::BenchConfig bench_cfg;
  bench_cfg.model_id = cfg.model_id;
  bench_cfg.temperature = cfg.bench_temperature;
  bench_cfg.max_tokens = cfg.bench_max_tokens;

  auto mode = evaluate::bench_mode_from_string(mode_name);
  auto result = evaluate::benchmark_llm(bench_pairs, mode, *gw, prompt_lib, bench_cfg);
  result.report.metadata["seed"] = cfg.seed;
  result.report.metadata["split"] = cfg.bench_split;

  write_json_file(io.out("bench/" + mode_name + ".json"),
                  evaluate::report_to_json(result.report));
  std::ofstream(io.out("bench/" + mode_name + "_confusion.txt"))
      << evaluate::matrix_to_text(result.report.matrix);
  std::ofstream csv(io.out("bench/" + mode_name + "_pairs.csv"));
  csv << "pair_id,truth,predicted,request_hash,error\n";
  for (const auto& outcome : result.outcomes) {
    std::string error = outcome.error;
    for (char& c : error) {
      if (c == ',' || c == '\n' || c == '\r') c = ' ';
    }
    csv << outcome.pair_id << "," << answerability::to_string(outcome.truth) << ","
        << (outcome.predicted ? answerability::to_string(*outcome.predicted) : "unparseable")
        << "," << outcome.request_hash << "," << error << "\n";
  }
  io.write_manifest({{"mode", mode_name}, {"pairs", bench_pairs.size()}});
  std::cerr << "bench-llm " << mode_name << ": accuracy " << result.report.accuracy << " on "
            << bench_pairs.size() << " pairs\n";
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"filter",  "paraphrase", "variants", "pairs",
                                                 "split",   "validate",   "features", "train",
                                                 "eval",    "bench-llm",  "all"};
  return names;
}

void run_stage(const std::string& name, const PipelineConfig& cfg,
               const std::string& bench_mode) {
  cfg.validate();
  if (cfg.output_dir.empty()) {
    throw ConfigError("paths.output_dir is required");
  }
  OutputLock lock(cfg.output_dir);

  auto dispatch = [&](const std::string& stage) {
    if (stage == "filter") {
      stage_filter(cfg);
    } else if (stage == "paraphrase") {
      stage_paraphrase(cfg);
    } else if (stage == "variants") {
      stage_variants(cfg);
    } else if (stage == "pairs") {
      stage_pairs(cfg);
    } else if (stage == "split") {
      stage_split(cfg);
    } else if (stage == "validate") {
      stage_validate(cfg);
    } else if (stage == "features") {
      stage_features(cfg);
    } else if (stage == "train") {
      stage_train(cfg);
    } else if (stage == "eval") {
      stage_eval(cfg);
    } else if (stage == "bench-llm") {
      stage_bench(cfg, bench_mode);
    } else {
      throw ConfigError("unknown stage '" + stage + "'");
    }
  };

  if (name == "all") {
    for (const char* stage : {"filter", "paraphrase", "variants", "pairs", "split", "validate",
                              "features", "train", "eval"}) {
      dispatch(stage);
    }
  } else {
    dispatch(name);
  }
}

}  // namespace scr::pipeline
