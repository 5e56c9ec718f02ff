#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scr/answerability.hpp"
#include "scr/errors.hpp"
#include "scr/gateway.hpp"
#include "scr/prompts.hpp"

namespace scr::evaluate {

class MetricsError : public Error {
 public:
  using Error::Error;
};

// Rows = true class, columns = predicted, fixed order
// (Equivalence, Inclusion, SemanticOverlap).
struct ConfusionMatrix {
  std::array<std::array<long, 3>, 3> counts{};

  long total() const;
  long trace() const;
  long row_sum(int row) const;
  long col_sum(int col) const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& truths,
                                 const std::vector<int>& predictions);

struct EvalReport {
  ConfusionMatrix matrix;
  double accuracy = 0.0;
  std::array<double, 3> precision{};
  std::array<double, 3> recall{};
  std::array<double, 3> f1{};
  double macro_f1 = 0.0;
  long unparseable = 0;                      // prompted-model runs only
  std::array<long, 3> unparseable_by_truth{};
  long errored = 0;                          // gateway failures in partial runs
  nlohmann::json metadata = nlohmann::json::object();
};

// Accuracy, per-class P/R/F1 (0/0 defined as 0) and macro-F1 from a
// matrix alone.
EvalReport classification_metrics(const ConfusionMatrix& matrix);

// Predicts the modal truth class everywhere; ties go to the lowest class
// in fixed order.
EvalReport majority_baseline(const std::vector<int>& truths);

enum class BenchMode { ZeroShot, FewShot, ZeroCot, FewCot };

std::string to_string(BenchMode mode);
BenchMode bench_mode_from_string(const std::string& s);

// unparseable responses are a distinct outcome scored as wrong
struct ParsedLabel {
  std::optional<answerability::RelationClass> label;
  bool parseable() const { return label.has_value(); }
};

// Case-insensitive search for the three label strings; the last mention
// wins (the CoT rule; with a single mention it reduces to that mention).
ParsedLabel parse_label(const std::string& response);

struct BenchPair {
  std::string pair_id;
  std::string text_a;
  std::string text_b;
  answerability::RelationClass truth;
};

struct BenchConfig {
  std::string model_id = "gpt-4.1";
  double temperature = 0.0;
  int max_tokens = 1024;
  bool partial = false;  // record gateway errors per pair instead of failing
};

struct PairOutcome {
  std::string pair_id;
  answerability::RelationClass truth;
  std::optional<answerability::RelationClass> predicted;  // nullopt = unparseable
  std::string response_text;
  std::string request_hash;
  std::string error;  // non-empty when the gateway call failed (partial runs)
};

struct BenchResult {
  EvalReport report;
  std::vector<PairOutcome> outcomes;  // sorted by pair_id
};

// One completion per pair through the Appendix-B template for the mode;
// unparseable responses count against the model.
BenchResult benchmark_llm(const std::vector<BenchPair>& pairs, BenchMode mode,
                          gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                          const BenchConfig& cfg);

// Renders the benchmark prompt for one pair (exposed for transcript
// tooling and tests).
gateway::CompletionRequest bench_request(const BenchPair& pair, BenchMode mode,
                                         const prompts::PromptLibrary& lib,
                                         const BenchConfig& cfg);

nlohmann::json report_to_json(const EvalReport& report);
std::string matrix_to_text(const ConfusionMatrix& matrix);

}  // namespace scr::evaluate
