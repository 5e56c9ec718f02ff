#include "scr/prompts.hpp"

#include <fstream>
#include <sstream>

#include "scr/text.hpp"

namespace scr::prompts {

namespace {

constexpr const char* kQaSystem =
    "You are a precise question-answering assistant. Answer questions based solely on the "
    "context provided. Provide direct, specific answers.";

constexpr const char* kQaUser =
    "Context:\n"
    "{context}\n"
    "\n"
    "Question: {question}";

constexpr const char* kJudge =
    "Compare two answers to the same question and determine if they contain the same "
    "information.\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "Answer 1: {answer1}\n"
    "\n"
    "Answer 2: {answer2}\n"
    "\n"
    "Do these answers contain the same information? Answer only 'YES' or 'NO'.";

constexpr const char* kZeroShot =
    "You are a language expert tasked with identifying the semantic relation between two "
    "texts. The possible relations are:\n"
    "\n"
    "1. EQUIVALENCE \u2013 Both texts express the same information.\n"
    "2. INCLUSION \u2013 one text contains all the information in the other, plus additional "
    "content.\n"
    "3. SEMANTIC OVERLAP \u2013 the texts have partial semantic overlap, but neither fully "
    "includes the other.\n"
    "\n"
    "Text A:\n"
    "\n"
    "\u201c{TEXT A}\u201d\n"
    "\n"
    "Text B:\n"
    "\n"
    "\u201c{TEXT B}\u201d\n"
    "\n"
    "What is the semantic relation between Text A and Text B?\n"
    "\n"
    "Answer with one of: \u201cEQUIVALENCE\u201d, \u201cINCLUSION\u201d, or \u201cSEMANTIC "
    "OVERLAP\u201d.";

constexpr const char* kFewShot =
    "You are a language expert tasked with identifying the semantic relation between two "
    "texts. The possible relations are:\n"
    "\n"
    "1. EQUIVALENCE \u2013 Both texts express the same information.\n"
    "2. INCLUSION \u2013 one text contains all the information in the other, plus additional "
    "content.\n"
    "3. SEMANTIC OVERLAP \u2013 the texts have partial semantic overlap, but neither fully "
    "includes the other.\n"
    "\n"
    "Example 1:\n"
    "\n"
    "Text A: \u201cThe Eiffel Tower is located in Paris and attracts millions of tourists "
    "every year.\u201d\n"
    "\n"
    "Text B: \u201cMany tourists visit the Eiffel Tower in Paris annually.\u201d\n"
    "\n"
    "Answer: INCLUSION\n"
    "\n"
    "Example 2:\n"
    "\n"
    "Text A: \u201cPhotosynthesis occurs in plant leaves using sunlight, water, and carbon "
    "dioxide.\u201d\n"
    "\n"
    "Text B: \u201cThe process of photosynthesis in plants uses water, CO\u2082, and sunlight "
    "in leaves.\u201d\n"
    "\n"
    "Answer: EQUIVALENCE\n"
    "\n"
    "Example 3:\n"
    "\n"
    "Text A: \u201cThe collapse of mortgage-backed securities triggered the 2008 financial "
    "crisis.\u201d\n"
    "\n"
    "Text B: \u201cThe Great Depression was caused by a stock market crash in 1929.\u201d\n"
    "\n"
    "Answer: SEMANTIC OVERLAP\n"
    "\n"
    "Now, determine the relation in the following example:\n"
    "\n"
    "Text A:\n"
    "\n"
    "\u201c{TEXT A}\u201d\n"
    "\n"
    "Text B:\n"
    "\n"
    "\u201c{TEXT B}\u201d\n"
    "\n"
    "Answer:";

constexpr const char* kCotSuffix =
    "First, briefly explain your reasoning in 2\u20133 sentences. Then, on a new line, answer "
    "with exactly one of: EQUIVALENCE, INCLUSION, SEMANTIC OVERLAP.";

constexpr const char* kParaphraseAnswer =
    "Using only the information in the context, answer the question in one complete, "
    "self-contained sentence written in your own words.\n"
    "\n"
    "Context:\n"
    "{context}\n"
    "\n"
    "Question: {question}";

constexpr const char* kParaphraseStitch =
    "Combine the following sentences into one coherent passage. Preserve every piece of "
    "information, do not add new facts, and vary the wording and sentence structure relative "
    "to typical encyclopedic phrasing.\n"
    "\n"
    "Sentences:\n"
    "{answers}\n"
    "\n"
    "Output only the passage.";

constexpr const char* kRemoval =
    "Rewrite the text below so that it no longer contains the information needed to answer "
    "the listed questions. Preserve all other information and keep the rewritten text "
    "fluent.\n"
    "\n"
    "Questions:\n"
    "{questions}\n"
    "\n"
    "Text:\n"
    "{text}\n"
    "\n"
    "Output only the rewritten text.";

constexpr const char* kRetryHint =
    "\n"
    "\n"
    "(Produce a rewrite different from previous attempts; variation {attempt}.)";

struct BuiltIn {
  const char* id;
  const char* system_text;
  const char* user_text;
};

// qa is the only template with a separate system message; everything else
// is sent as a single user message.
const BuiltIn kBuiltIns[] = {
    {"qa", kQaSystem, kQaUser},
    {"judge", "", kJudge},
    {"zero_shot", "", kZeroShot},
    {"few_shot", "", kFewShot},
    {"cot_suffix", "", kCotSuffix},
    {"paraphrase_answer", "", kParaphraseAnswer},
    {"paraphrase_stitch", "", kParaphraseStitch},
    {"removal", "", kRemoval},
    {"retry_hint", "", kRetryHint},
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read prompt file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string render_text(const std::string& templ, const Bindings& bindings) {
  std::string out;
  out.reserve(templ.size());
  size_t i = 0;
  while (i < templ.size()) {
    char c = templ[i];
    if (c == '{') {
      size_t close = templ.find('}', i + 1);
      if (close != std::string::npos) {
        std::string name = templ.substr(i + 1, close - i - 1);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
          throw MissingBindingError("missing binding for placeholder '" + name + "'");
        }
        out += it->second;
        i = close + 1;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::pair<std::string, std::string> render(const PromptTemplate& templ, const Bindings& bindings) {
  return {render_text(templ.system_text, bindings), render_text(templ.user_text, bindings)};
}

std::vector<std::string> placeholders(const std::string& templ) {
  std::vector<std::string> names;
  size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] == '{') {
      size_t close = templ.find('}', i + 1);
      if (close != std::string::npos) {
        names.push_back(templ.substr(i + 1, close - i - 1));
        i = close + 1;
        continue;
      }
    }
    ++i;
  }
  return names;
}

PromptLibrary::PromptLibrary() : version_("1") {
  for (const auto& b : kBuiltIns) {
    templates_[b.id] = PromptTemplate{b.id, b.system_text, b.user_text};
  }
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  auto version_file = dir / "VERSION";
  if (std::filesystem::exists(version_file)) {
    lib.version_ = text::trim(read_file(version_file));
  }
  for (auto& [id, templ] : lib.templates_) {
    auto user_path = dir / (id + ".txt");
    if (!std::filesystem::exists(user_path)) {
      throw Error("prompt directory " + dir.string() + " is missing " + id + ".txt");
    }
    templ.user_text = read_file(user_path);
    auto system_path = dir / (id + "_system.txt");
    if (std::filesystem::exists(system_path)) {
      templ.system_text = read_file(system_path);
    }
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw Error("unknown prompt template: " + id);
  }
  return it->second;
}

std::vector<std::string> PromptLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, templ] : templates_) out.push_back(id);
  return out;
}

}  // namespace scr::prompts
