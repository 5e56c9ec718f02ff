#include "scr/evaluate.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "scr/text.hpp"

namespace scr::evaluate {

namespace {

using answerability::RelationClass;
using nlohmann::json;

constexpr std::array<const char*, 3> kClassNames = {"equivalence", "inclusion",
                                                    "semantic_overlap"};

// Benchmark metrics treat an unparseable response as a wrong prediction
// that sits in no predicted-class column: it counts in the accuracy
// denominator and in its truth row's recall denominator. With zero
// unparseables this reduces exactly to classification_metrics.
EvalReport metrics_with_unparseable(const ConfusionMatrix& matrix,
                                    const std::array<long, 3>& unparseable_by_truth) {
  EvalReport report;
  report.matrix = matrix;
  report.unparseable_by_truth = unparseable_by_truth;
  for (long u : unparseable_by_truth) report.unparseable += u;

  long total = matrix.total() + report.unparseable;
  if (total <= 0) {
    throw MetricsError("classification_metrics: empty matrix");
  }
  report.accuracy = static_cast<double>(matrix.trace()) / static_cast<double>(total);
  double f1_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    long tp = matrix.counts[c][c];
    long col = matrix.col_sum(c);
    long row = matrix.row_sum(c) + unparseable_by_truth[c];
    report.precision[c] = col > 0 ? static_cast<double>(tp) / col : 0.0;
    report.recall[c] = row > 0 ? static_cast<double>(tp) / row : 0.0;
    double denom = report.precision[c] + report.recall[c];
    report.f1[c] = denom > 0 ? 2.0 * report.precision[c] * report.recall[c] / denom : 0.0;
    f1_sum += report.f1[c];
  }
  report.macro_f1 = f1_sum / 3.0;
  return report;
}

}  // namespace

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts) {
    for (long v : row) t += v;
  }
  return t;
}

long ConfusionMatrix::trace() const {
  return counts[0][0] + counts[1][1] + counts[2][2];
}

long ConfusionMatrix::row_sum(int row) const {
  return counts[row][0] + counts[row][1] + counts[row][2];
}

long ConfusionMatrix::col_sum(int col) const {
  return counts[0][col] + counts[1][col] + counts[2][col];
}

ConfusionMatrix confusion_matrix(const std::vector<int>& truths,
                                 const std::vector<int>& predictions) {
  if (truths.size() != predictions.size()) {
    throw MetricsError("confusion_matrix: " + std::to_string(truths.size()) + " truths vs " +
                       std::to_string(predictions.size()) + " predictions");
  }
  ConfusionMatrix matrix;
  for (size_t i = 0; i < truths.size(); ++i) {
    int t = truths[i];
    int p = predictions[i];
    if (t < 0 || t > 2 || p < 0 || p > 2) {
      throw MetricsError("confusion_matrix: label outside the class set at index " +
                         std::to_string(i));
    }
    ++matrix.counts[t][p];
  }
  return matrix;
}

EvalReport classification_metrics(const ConfusionMatrix& matrix) {
  return metrics_with_unparseable(matrix, {0, 0, 0});
}

EvalReport majority_baseline(const std::vector<int>& truths) {
  if (truths.empty()) {
    throw MetricsError("majority_baseline: no truths");
  }
  std::array<long, 3> counts{};
  for (int t : truths) {
    if (t < 0 || t > 2) throw MetricsError("majority_baseline: label outside the class set");
    ++counts[t];
  }
  int majority = 0;
  for (int c = 1; c < 3; ++c) {
    if (counts[c] > counts[majority]) majority = c;  // ties keep the lowest class
  }
  std::vector<int> predictions(truths.size(), majority);
  EvalReport report = classification_metrics(confusion_matrix(truths, predictions));
  report.metadata["predictor"] = "majority_baseline";
  report.metadata["majority_class"] = kClassNames[majority];
  return report;
}

std::string to_string(BenchMode mode) {
  switch (mode) {
    case BenchMode::ZeroShot: return "zero_shot";
    case BenchMode::FewShot: return "few_shot";
    case BenchMode::ZeroCot: return "zero_cot";
    case BenchMode::FewCot: return "few_cot";
  }
  return "?";
}

BenchMode bench_mode_from_string(const std::string& s) {
  if (s == "zero_shot") return BenchMode::ZeroShot;
  if (s == "few_shot") return BenchMode::FewShot;
  if (s == "zero_cot") return BenchMode::ZeroCot;
  if (s == "few_cot") return BenchMode::FewCot;
  throw ConfigError("unknown benchmark mode '" + s + "'");
}

ParsedLabel parse_label(const std::string& response) {
  struct Mention {
    size_t pos;
    RelationClass label;
  };
  static const std::array<std::pair<const char*, RelationClass>, 3> needles = {{
      {"EQUIVALENCE", RelationClass::Equivalence},
      {"INCLUSION", RelationClass::Inclusion},
      {"SEMANTIC OVERLAP", RelationClass::SemanticOverlap},
  }};
  std::optional<Mention> last;
  bool ambiguous = false;
  for (const auto& [needle, label] : needles) {
    size_t pos = 0;
    while ((pos = text::find_ci(response, needle, pos)) != std::string_view::npos) {
      if (!last || pos > last->pos) {
        last = Mention{pos, label};
        ambiguous = false;
      } else if (pos == last->pos && label != last->label) {
        ambiguous = true;
      }
      ++pos;
    }
  }
  if (!last || ambiguous) return {};
  return {last->label};
}

gateway::CompletionRequest bench_request(const BenchPair& pair, BenchMode mode,
                                         const prompts::PromptLibrary& lib,
                                         const BenchConfig& cfg) {
  const bool few = mode == BenchMode::FewShot || mode == BenchMode::FewCot;
  const bool cot = mode == BenchMode::ZeroCot || mode == BenchMode::FewCot;
  const auto& templ = lib.get(few ? "few_shot" : "zero_shot");
  std::string user_text =
      prompts::render_text(templ.user_text, {{"TEXT A", pair.text_a}, {"TEXT B", pair.text_b}});
  if (cot) {
    user_text += "\n\n" + lib.get("cot_suffix").user_text;
  }
  return gateway::CompletionRequest{cfg.model_id, templ.system_text, user_text, cfg.temperature,
                                    cfg.max_tokens};
}

BenchResult benchmark_llm(const std::vector<BenchPair>& pairs, BenchMode mode,
                          gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                          const BenchConfig& cfg) {
  BenchResult result;
  result.outcomes.reserve(pairs.size());
  for (const auto& pair : pairs) {
    PairOutcome outcome;
    outcome.pair_id = pair.pair_id;
    outcome.truth = pair.truth;
    auto request = bench_request(pair, mode, lib, cfg);
    outcome.request_hash = gateway::request_hash(request);
    try {
      outcome.response_text = gw.complete(request);
      outcome.predicted = parse_label(outcome.response_text).label;
    } catch (const Error& ex) {
      if (!cfg.partial) throw;
      outcome.error = ex.what();
    }
    result.outcomes.push_back(std::move(outcome));
  }
  std::sort(result.outcomes.begin(), result.outcomes.end(),
            [](const PairOutcome& a, const PairOutcome& b) { return a.pair_id < b.pair_id; });

  std::vector<int> truths, predictions;
  std::array<long, 3> unparseable_by_truth{};
  long errored = 0;
  for (const auto& outcome : result.outcomes) {
    if (!outcome.error.empty()) {
      ++errored;
      continue;  // partial runs exclude failed calls from the matrix
    }
    if (!outcome.predicted) {
      ++unparseable_by_truth[static_cast<int>(outcome.truth)];
      continue;
    }
    truths.push_back(static_cast<int>(outcome.truth));
    predictions.push_back(static_cast<int>(*outcome.predicted));
  }
  result.report = metrics_with_unparseable(confusion_matrix(truths, predictions),
                                           unparseable_by_truth);
  result.report.errored = errored;
  result.report.metadata["mode"] = to_string(mode);
  result.report.metadata["model_id"] = cfg.model_id;
  result.report.metadata["pairs"] = pairs.size();
  result.report.metadata["partial"] = cfg.partial;
  return result;
}

nlohmann::json report_to_json(const EvalReport& report) {
  json per_class = json::object();
  for (int c = 0; c < 3; ++c) {
    per_class[kClassNames[c]] = {{"precision", report.precision[c]},
                                 {"recall", report.recall[c]},
                                 {"f1", report.f1[c]}};
  }
  json matrix = json::array();
  for (const auto& row : report.matrix.counts) {
    matrix.push_back(json(row));
  }
  return {{"accuracy", report.accuracy},
          {"macro_f1", report.macro_f1},
          {"per_class", per_class},
          {"confusion_matrix", matrix},
          {"class_order", json(kClassNames)},
          {"unparseable", report.unparseable},
          {"errored", report.errored},
          {"metadata", report.metadata}};
}

std::string matrix_to_text(const ConfusionMatrix& matrix) {
  static const std::array<const char*, 3> kShort = {"equiv", "incl", "overlap"};
  std::ostringstream out;
  out << std::setw(10) << "true\\pred";
  for (const auto* name : kShort) out << std::setw(10) << name;
  out << "\n";
  for (int r = 0; r < 3; ++r) {
    out << std::setw(10) << kShort[r];
    for (int c = 0; c < 3; ++c) out << std::setw(10) << matrix.counts[r][c];
    out << "\n";
  }
  return out.str();
}

}  // namespace scr::evaluate
