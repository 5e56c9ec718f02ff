#include "scr/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "scr/text.hpp"

namespace scr::corpus {

namespace {

using nlohmann::json;

std::string require_string(const json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw SquadParseError(std::string("SQuAD parse error: missing or non-string '") + key +
                          "' in " + where);
  }
  return j.at(key).get<std::string>();
}

}  // namespace

std::vector<ContextRecord> load_squad(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw SquadParseError("cannot open SQuAD file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();
  if (text::trim(content).empty()) {
    throw SquadParseError("SQuAD file is empty: " + path.string());
  }

  json root;
  try {
    root = json::parse(content);
  } catch (const json::exception& ex) {
    throw SquadParseError(std::string("SQuAD parse error: ") + ex.what());
  }
  if (!root.is_object() || !root.contains("data") || !root.at("data").is_array()) {
    throw SquadParseError("SQuAD parse error: top-level 'data' array missing");
  }

  std::vector<ContextRecord> records;
  size_t paragraph_ordinal = 0;
  for (const auto& article : root.at("data")) {
    std::string title = article.contains("title") && article.at("title").is_string()
                            ? article.at("title").get<std::string>()
                            : "";
    if (!article.contains("paragraphs") || !article.at("paragraphs").is_array()) {
      throw SquadParseError("SQuAD parse error: article missing 'paragraphs' array");
    }
    for (const auto& paragraph : article.at("paragraphs")) {
      ContextRecord record;
      char id[16];
      std::snprintf(id, sizeof(id), "ctx-%04zu", paragraph_ordinal++);
      record.context_id = id;
      record.title = title;
      record.passage = text::normalize_whitespace(require_string(paragraph, "context", "paragraph"));
      if (record.passage.empty()) {
        throw SquadParseError("SQuAD parse error: empty context in " + record.context_id);
      }
      if (!paragraph.contains("qas") || !paragraph.at("qas").is_array()) {
        throw SquadParseError("SQuAD parse error: paragraph missing 'qas' array");
      }
      std::set<std::string> seen_ids;
      for (const auto& qa : paragraph.at("qas")) {
        if (qa.value("is_impossible", false)) continue;  // v2.0 negatives
        QAItem item;
        item.question_id = require_string(qa, "id", "qa entry");
        item.question = text::normalize_whitespace(require_string(qa, "question", "qa entry"));
        if (item.question.empty()) {
          throw SquadParseError("SQuAD parse error: empty question " + item.question_id);
        }
        if (!seen_ids.insert(item.question_id).second) {
          throw SquadParseError("SQuAD parse error: duplicate question id " + item.question_id);
        }
        if (!qa.contains("answers") || !qa.at("answers").is_array() || qa.at("answers").empty()) {
          throw SquadParseError("SQuAD parse error: question " + item.question_id +
                                " has no answers");
        }
        for (const auto& answer : qa.at("answers")) {
          item.reference_answers.push_back(
              text::normalize_whitespace(require_string(answer, "text", "answer entry")));
        }
        record.questions.push_back(std::move(item));
      }
      records.push_back(std::move(record));
    }
  }
  return records;
}

std::vector<ContextRecord> eligible_contexts(const std::vector<ContextRecord>& records,
                                             int min_questions) {
  if (min_questions < 1) {
    throw PreconditionError("eligible_contexts: min_questions must be >= 1");
  }
  std::vector<ContextRecord> out;
  for (const auto& record : records) {
    if (record.questions.size() >= static_cast<size_t>(min_questions)) {
      out.push_back(record);
    }
  }
  return out;
}

ContextRecord select_questions(const ContextRecord& record, int n) {
  if (n < 1) {
    throw PreconditionError("select_questions: n must be >= 1");
  }
  if (record.questions.size() < static_cast<size_t>(n)) {
    throw InsufficientQuestionsError("select_questions: record " + record.context_id + " has " +
                                     std::to_string(record.questions.size()) +
                                     " questions, need " + std::to_string(n));
  }
  ContextRecord out = record;
  out.questions.assign(record.questions.begin(), record.questions.begin() + n);
  return out;
}

nlohmann::json to_json(const ContextRecord& record) {
  json questions = json::array();
  for (const auto& item : record.questions) {
    questions.push_back({{"question_id", item.question_id},
                         {"question", item.question},
                         {"reference_answers", item.reference_answers}});
  }
  return {{"context_id", record.context_id},
          {"title", record.title},
          {"passage", record.passage},
          {"questions", questions}};
}

ContextRecord record_from_json(const nlohmann::json& j) {
  ContextRecord record;
  record.context_id = j.at("context_id").get<std::string>();
  record.title = j.at("title").get<std::string>();
  record.passage = j.at("passage").get<std::string>();
  for (const auto& q : j.at("questions")) {
    QAItem item;
    item.question_id = q.at("question_id").get<std::string>();
    item.question = q.at("question").get<std::string>();
    item.reference_answers = q.at("reference_answers").get<std::vector<std::string>>();
    record.questions.push_back(std::move(item));
  }
  return record;
}

}  // namespace scr::corpus
