#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scr/answerability.hpp"
#include "scr/corpus.hpp"
#include "scr/embedding.hpp"
#include "scr/errors.hpp"
#include "scr/gateway.hpp"
#include "scr/lexfeat.hpp"
#include "scr/prompts.hpp"

namespace scr::genpipe {

class PatternSizeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ParaphraseExhaustedError : public Error {
 public:
  using Error::Error;
};

class VariantExhaustedError : public Error {
 public:
  using Error::Error;
};

class EmptyClassError : public Error {
 public:
  using Error::Error;
};

struct GenConfig {
  std::string model_id = "gpt-4.1";
  double qa_temperature = 0.0;
  double gen_temperature = 0.7;  // paraphrase and removal rewrites
  int qa_max_tokens = 256;
  int gen_max_tokens = 1024;
  double meteor_gate = 0.6;
  int paraphrase_retry_budget = 3;
  int variant_retry_budget = 3;
  bool coerce_disjoint = true;
  int n_questions = 5;
  lexfeat::MeteorParams meteor_params{};

  answerability::QaCallConfig qa_call() const {
    return {model_id, qa_temperature, qa_max_tokens};
  }
};

struct RemovalPattern {
  int index = 0;                     // 0..5, |removed_ids| == index
  std::set<std::string> removed_ids;
};

enum class Side { Original = 0, Paraphrase = 1 };

std::string to_string(Side side);

struct TextVariant {
  std::string source_id;
  Side side;
  RemovalPattern pattern;
  std::string text;
  answerability::AnswerableSet measured_set;
};

struct LabeledPair {
  std::string pair_id;
  std::string source_id;
  int pattern_a = 0;  // original-side pattern index
  int pattern_b = 0;  // paraphrase-side pattern index
  std::string text_a;
  std::string text_b;
  answerability::SCRLabel construction_label;  // direction from the grid rule
  std::optional<answerability::SCRLabel> algebra_label;
  std::optional<bool> agreement;

  answerability::RelationClass relation_class() const {
    return *answerability::class_of(construction_label);
  }
};

struct SourceBundle {
  corpus::ContextRecord context;  // designated questions only
  std::string paraphrase_text;
  double paraphrase_meteor = 0.0;
  std::map<std::string, std::string> references;  // full-source model answers
  std::vector<TextVariant> variants;  // 12: original 0..5, paraphrase 0..5
  std::vector<LabeledPair> pairs;     // 36
};

// Step 1: keep a record iff the model answers every designated question
// correctly, judged against the first corpus reference answer. Records
// that raise gateway errors are excluded and reported via diagnostics.
std::vector<corpus::ContextRecord> filter_contexts(gateway::LlmGateway& gw,
                                                   const prompts::PromptLibrary& lib,
                                                   const GenConfig& cfg,
                                                   const std::vector<corpus::ContextRecord>& records,
                                                   std::vector<std::string>* diagnostics = nullptr);

// Model answers from the full source passage; the reference map used by
// every downstream answerability check.
std::map<std::string, std::string> reference_answers(gateway::LlmGateway& gw,
                                                     const prompts::PromptLibrary& lib,
                                                     const GenConfig& cfg,
                                                     const corpus::ContextRecord& record);

// Step 2: answer-and-stitch paraphrase, accepted when METEOR against the
// source is under the gate and every question stays answerable.
std::string generate_paraphrase(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                                const GenConfig& cfg, const corpus::ContextRecord& record,
                                const std::map<std::string, std::string>& references);

// Step 3 patterns: deterministic family R_0..R_5 with |R_k| = k. R_k for
// k >= 1 is the lexicographically first subset of size k that is
// non-nested with every previously chosen non-empty pattern, falling back
// to the lexicographically first subset when none exists. For n >= 8 the
// family is pairwise non-nested.
std::array<RemovalPattern, 6> removal_patterns(const std::vector<std::string>& question_ids,
                                               int n);

// Step 3 variants: 12 rewrites (original 0..5 then paraphrase 0..5), each
// post-checked so removed questions judge NO and retained ones YES.
std::vector<TextVariant> make_variants(gateway::LlmGateway& gw,
                                       const prompts::PromptLibrary& lib, const GenConfig& cfg,
                                       const corpus::ContextRecord& record,
                                       const std::string& paraphrase_text,
                                       const std::map<std::string, std::string>& references,
                                       const std::array<RemovalPattern, 6>& patterns);

// Step 4: the full 6x6 grid -> 36 pairs (6 equivalence, 10 inclusion, 20
// semantic overlap) with algebra labels and agreement flags.
std::vector<LabeledPair> generate_pairs(const std::vector<TextVariant>& variants,
                                        bool coerce_disjoint);

// Steps 2-4 for one filtered record.
SourceBundle build_source_bundle(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                                 const GenConfig& cfg, const corpus::ContextRecord& record);

struct SplitResult {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Stratified split: exact global test size ceil((1-ratio)*N), per-class
// counts by largest remainder, membership by seeded shuffle.
SplitResult split_dataset(
    const std::vector<std::pair<std::string, answerability::RelationClass>>& labeled_ids,
    double ratio, uint64_t seed);

// Construction-vs-algebra agreement, per-source METEOR, and per-pair
// embedding cosine (absent and flagged when the provider fails).
nlohmann::json validate_dataset(const std::vector<SourceBundle>& bundles, const GenConfig& cfg,
                                embedding::EmbeddingProvider* provider);

nlohmann::json variant_to_json(const TextVariant& variant);
TextVariant variant_from_json(const nlohmann::json& j);
nlohmann::json pair_to_json(const LabeledPair& pair);
LabeledPair pair_from_json(const nlohmann::json& j);

}  // namespace scr::genpipe
