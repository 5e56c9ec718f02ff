#include "scr/answerability.hpp"

#include <algorithm>

#include "scr/text.hpp"

namespace scr::answerability {

std::string to_string(SCRLabel label) {
  switch (label) {
    case SCRLabel::Equivalence: return "equivalence";
    case SCRLabel::InclusionAContainsB: return "inclusion_a_contains_b";
    case SCRLabel::InclusionBContainsA: return "inclusion_b_contains_a";
    case SCRLabel::SemanticOverlap: return "semantic_overlap";
    case SCRLabel::Disjoint: return "disjoint";
  }
  return "?";
}

SCRLabel label_from_string(const std::string& s) {
  if (s == "equivalence") return SCRLabel::Equivalence;
  if (s == "inclusion_a_contains_b") return SCRLabel::InclusionAContainsB;
  if (s == "inclusion_b_contains_a") return SCRLabel::InclusionBContainsA;
  if (s == "semantic_overlap") return SCRLabel::SemanticOverlap;
  if (s == "disjoint") return SCRLabel::Disjoint;
  throw Error("unknown SCR label: " + s);
}

std::string to_string(RelationClass c) {
  switch (c) {
    case RelationClass::Equivalence: return "equivalence";
    case RelationClass::Inclusion: return "inclusion";
    case RelationClass::SemanticOverlap: return "semantic_overlap";
  }
  return "?";
}

RelationClass class_from_string(const std::string& s) {
  if (s == "equivalence") return RelationClass::Equivalence;
  if (s == "inclusion") return RelationClass::Inclusion;
  if (s == "semantic_overlap") return RelationClass::SemanticOverlap;
  throw Error("unknown relation class: " + s);
}

std::optional<RelationClass> class_of(SCRLabel label) {
  switch (label) {
    case SCRLabel::Equivalence: return RelationClass::Equivalence;
    case SCRLabel::InclusionAContainsB:
    case SCRLabel::InclusionBContainsA: return RelationClass::Inclusion;
    case SCRLabel::SemanticOverlap: return RelationClass::SemanticOverlap;
    case SCRLabel::Disjoint: return std::nullopt;
  }
  return std::nullopt;
}

std::string answer_question(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                            const QaCallConfig& cfg, const std::string& context_text,
                            const std::string& question) {
  if (text::trim(context_text).empty()) {
    throw PreconditionError("answer_question: context text is empty");
  }
  if (text::trim(question).empty()) {
    throw PreconditionError("answer_question: question is empty");
  }
  auto [system_text, user_text] =
      prompts::render(lib.get("qa"), {{"context", context_text}, {"question", question}});
  gateway::CompletionRequest request{cfg.model_id, system_text, user_text, cfg.temperature,
                                     cfg.max_tokens};
  std::string answer = text::trim(gw.complete(request));
  if (answer.empty()) {
    throw gateway::EmptyResponseError("model returned an empty answer");
  }
  return answer;
}

bool parse_verdict(const std::string& response) {
  std::string trimmed = text::trim(response);
  auto word_boundary_at = [&](size_t pos) {
    if (pos >= trimmed.size()) return true;
    unsigned char c = static_cast<unsigned char>(trimmed[pos]);
    return !std::isalnum(c);
  };
  if (text::starts_with_ci(trimmed, "YES") && word_boundary_at(3)) return true;
  if (text::starts_with_ci(trimmed, "NO") && word_boundary_at(2)) return false;
  throw VerdictParseError("unparseable JUDGE verdict: '" + trimmed + "'");
}

bool judge_equivalence(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                       const QaCallConfig& cfg, const std::string& question,
                       const std::string& answer1, const std::string& answer2) {
  if (text::trim(question).empty() || text::trim(answer1).empty() ||
      text::trim(answer2).empty()) {
    throw PreconditionError("judge_equivalence: all inputs must be non-empty");
  }
  auto [system_text, user_text] = prompts::render(
      lib.get("judge"), {{"question", question}, {"answer1", answer1}, {"answer2", answer2}});
  gateway::CompletionRequest request{cfg.model_id, system_text, user_text, cfg.temperature,
                                     cfg.max_tokens};
  return parse_verdict(gw.complete(request));
}

AnswerableSet answerable_set(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                             const QaCallConfig& cfg, const std::string& variant_text,
                             const std::vector<corpus::QAItem>& items,
                             const std::map<std::string, std::string>& references) {
  AnswerableSet result;
  for (const auto& item : items) {
    if (references.find(item.question_id) == references.end()) {
      throw PreconditionError("answerable_set: no reference answer for question " +
                              item.question_id);
    }
    result.universe.push_back(item.question_id);
  }
  for (const auto& item : items) {
    try {
      std::string answer = answer_question(gw, lib, cfg, variant_text, item.question);
      if (judge_equivalence(gw, lib, cfg, item.question, answer,
                            references.at(item.question_id))) {
        result.ids.insert(item.question_id);
      }
    } catch (const Error& ex) {
      throw Error("question " + item.question_id + ": " + ex.what());
    }
  }
  return result;
}

SCRLabel relation_of(const AnswerableSet& a, const AnswerableSet& b, bool coerce_disjoint) {
  if (a.universe != b.universe) {
    throw UniverseMismatchError("relation_of: answerable sets have different universes");
  }
  const auto& A = a.ids;
  const auto& B = b.ids;

  bool intersects = std::any_of(A.begin(), A.end(), [&](const auto& id) { return B.count(id); });
  if (!intersects) {
    return coerce_disjoint ? SCRLabel::SemanticOverlap : SCRLabel::Disjoint;
  }
  if (A == B) return SCRLabel::Equivalence;
  bool b_in_a = std::includes(A.begin(), A.end(), B.begin(), B.end());
  if (b_in_a) return SCRLabel::InclusionAContainsB;
  bool a_in_b = std::includes(B.begin(), B.end(), A.begin(), A.end());
  if (a_in_b) return SCRLabel::InclusionBContainsA;
  return SCRLabel::SemanticOverlap;
}

}  // namespace scr::answerability
