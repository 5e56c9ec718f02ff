#include "scr/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace scr::text {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

// Abbreviations whose trailing period does not end a sentence. Stored
// lowercase, without the period.
const std::set<std::string>& abbreviations() {
  static const std::set<std::string> abbrevs = {
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "gen", "rep", "sen",
      "etc", "vs", "no", "inc", "ltd", "co", "corp", "dept", "est", "fig",
      "al", "approx", "ca", "cf", "ed", "eds", "vol", "pp"};
  return abbrevs;
}

}  // namespace

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // drop leading whitespace
  for (char c : s) {
    if (is_space(c)) {
      if (!in_space) {
        out.push_back(' ');
        in_space = true;
      }
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (lower(s[i]) != lower(prefix[i])) return false;
  }
  return true;
}

bool is_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  size_t i = 0;
  const size_t n = s.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      size_t j = i;
      while (j < n) {
        unsigned char cj = static_cast<unsigned char>(s[j]);
        if (is_word_byte(cj)) {
          ++j;
        } else if (s[j] == '\'' && j + 1 < n && is_word_byte(static_cast<unsigned char>(s[j + 1]))) {
          // word-internal apostrophe: don't, o'clock
          ++j;
        } else {
          break;
        }
      }
      tokens.push_back(to_lower(s.substr(i, j - i)));
      i = j;
    } else {
      tokens.push_back(std::string(1, s[i]));
      ++i;
    }
  }
  return tokens;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> words;
  for (auto& t : tokenize(s)) {
    if (t.size() == 1 && is_punct(t[0])) continue;
    words.push_back(std::move(t));
  }
  return words;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> sentences;
  std::string current;
  const size_t n = s.size();
  for (size_t i = 0; i < n; ++i) {
    char c = s[i];
    current.push_back(c);
    if (c != '.' && c != '!' && c != '?') continue;

    // run of terminal punctuation ("?!", "...") ends together
    if (i + 1 < n && (s[i + 1] == '.' || s[i + 1] == '!' || s[i + 1] == '?')) continue;

    if (c == '.') {
      // word immediately before the period
      size_t w_end = current.size() - 1;
      size_t w_begin = w_end;
      while (w_begin > 0 && is_word_byte(static_cast<unsigned char>(current[w_begin - 1]))) --w_begin;
      std::string word = to_lower(std::string_view(current).substr(w_begin, w_end - w_begin));
      bool initial = word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]));
      if (initial || abbreviations().count(word)) continue;
    }

    // sentence break only before whitespace or end of text
    if (i + 1 < n && !is_space(s[i + 1])) continue;

    std::string sentence = trim(current);
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
    current.clear();
  }
  std::string tail = trim(current);
  if (!tail.empty()) sentences.push_back(std::move(tail));
  if (sentences.empty() && !trim(s).empty()) sentences.push_back(trim(s));
  return sentences;
}

size_t find_ci(std::string_view haystack, std::string_view needle, size_t from) {
  if (needle.empty()) return from <= haystack.size() ? from : std::string_view::npos;
  if (haystack.size() < needle.size()) return std::string_view::npos;
  for (size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (lower(haystack[i + j]) != lower(needle[j])) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

}  // namespace scr::text
