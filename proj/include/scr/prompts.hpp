#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scr/errors.hpp"

namespace scr::prompts {

class MissingBindingError : public Error {
 public:
  using Error::Error;
};

struct PromptTemplate {
  std::string template_id;
  std::string system_text;  // may be empty (no system message)
  std::string user_text;    // named {placeholder}s
};

using Bindings = std::map<std::string, std::string>;

// Substitutes {name} placeholders verbatim; no other transformation.
// Throws MissingBindingError naming the first unresolved placeholder.
std::string render_text(const std::string& templ, const Bindings& bindings);

// Rendered (system_text, user_text).
std::pair<std::string, std::string> render(const PromptTemplate& templ, const Bindings& bindings);

// Placeholder names referenced by a template text, in order of appearance.
std::vector<std::string> placeholders(const std::string& templ);

// The fixed prompt set. Built-in texts are compiled in; load() replaces
// them with the contents of a prompt directory (one .txt per id) so the
// shipped data files stay the auditable source.
class PromptLibrary {
 public:
  PromptLibrary();  // built-in texts, version "1"

  static PromptLibrary load(const std::filesystem::path& dir);

  const PromptTemplate& get(const std::string& id) const;
  const std::string& version() const { return version_; }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
  std::string version_;
};

}  // namespace scr::prompts
