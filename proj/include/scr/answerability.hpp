#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scr/corpus.hpp"
#include "scr/errors.hpp"
#include "scr/gateway.hpp"
#include "scr/prompts.hpp"

namespace scr::answerability {

class VerdictParseError : public Error {
 public:
  using Error::Error;
};

class UniverseMismatchError : public Error {
 public:
  using Error::Error;
};

// Which designated questions a text can answer, relative to the source's
// question-id universe.
struct AnswerableSet {
  std::vector<std::string> universe;  // designated question ids, in order
  std::set<std::string> ids;          // subset of universe

  bool contains(const std::string& id) const { return ids.count(id) > 0; }
};

enum class SCRLabel {
  Equivalence,
  InclusionAContainsB,
  InclusionBContainsA,
  SemanticOverlap,
  Disjoint,
};

// The three-way class used for dataset labels and classification.
enum class RelationClass { Equivalence = 0, Inclusion = 1, SemanticOverlap = 2 };

std::string to_string(SCRLabel label);
SCRLabel label_from_string(const std::string& s);
std::string to_string(RelationClass c);
RelationClass class_from_string(const std::string& s);

// Disjoint has no three-way class.
std::optional<RelationClass> class_of(SCRLabel label);

// Chat parameters for answer/judge calls; temperature 0 keeps the
// correctness gates deterministic on the provider side.
struct QaCallConfig {
  std::string model_id = "gpt-4.1";
  double temperature = 0.0;
  int max_tokens = 256;
};

// One completion call with the QA prompt; returns the trimmed answer.
std::string answer_question(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                            const QaCallConfig& cfg, const std::string& context_text,
                            const std::string& question);

// One JUDGE call; leading YES -> true, leading NO -> false, anything
// else is a VerdictParseError.
bool judge_equivalence(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                       const QaCallConfig& cfg, const std::string& question,
                       const std::string& answer1, const std::string& answer2);

// Parses a raw JUDGE response; exposed for tests.
bool parse_verdict(const std::string& response);

// Question q is in the result iff the JUDGE accepts the variant-derived
// answer against references[q]. Errors are annotated with the question id.
AnswerableSet answerable_set(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                             const QaCallConfig& cfg, const std::string& variant_text,
                             const std::vector<corpus::QAItem>& items,
                             const std::map<std::string, std::string>& references);

// Maps a pair of answerable sets to its SCR label. With coerce_disjoint,
// an empty intersection is reported as SemanticOverlap (the reading of
// the paper's worked example); otherwise as Disjoint.
SCRLabel relation_of(const AnswerableSet& a, const AnswerableSet& b, bool coerce_disjoint);

}  // namespace scr::answerability
