#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scr/errors.hpp"

namespace scr::corpus {

class SquadParseError : public Error {
 public:
  using Error::Error;
};

class InsufficientQuestionsError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct QAItem {
  std::string question_id;
  std::string question;
  std::vector<std::string> reference_answers;  // never empty
};

struct ContextRecord {
  std::string context_id;
  std::string title;
  std::string passage;  // whitespace-normalized, non-empty
  std::vector<QAItem> questions;
};

// Loads a SQuAD-format JSON file (v1.1 layout; v2.0 accepted, questions
// flagged impossible are dropped). One ContextRecord per paragraph, file
// order preserved.
std::vector<ContextRecord> load_squad(const std::filesystem::path& path);

// Records with at least min_questions questions, input order preserved.
std::vector<ContextRecord> eligible_contexts(const std::vector<ContextRecord>& records,
                                             int min_questions);

// Copy of the record keeping the first n questions in corpus order.
ContextRecord select_questions(const ContextRecord& record, int n);

// Canonical JSON form (stable key order) for the JSONL interchange format.
nlohmann::json to_json(const ContextRecord& record);
ContextRecord record_from_json(const nlohmann::json& j);

}  // namespace scr::corpus
