#include "scr/stemmer.hpp"

#include <array>
#include <cctype>

namespace scr::lexfeat {

namespace {

// The standard Porter rules operate on a buffer b[0..k]. Helpers follow
// the original description closely.
struct Stemmer {
  std::string b;
  int k = 0;   // offset of the last character
  int j = 0;   // boundary set by ends()

  bool is_consonant(int i) const {
    switch (b[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !is_consonant(i - 1);
      default:
        return true;
    }
  }

  // measure of b[0..j]: [C](VC)^m[V]
  int measure() const {
    int n = 0;
    int i = 0;
    while (true) {
      if (i > j) return n;
      if (!is_consonant(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j) return n;
        if (is_consonant(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j) return n;
        if (!is_consonant(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j; ++i) {
      if (!is_consonant(i)) return true;
    }
    return false;
  }

  bool double_consonant(int i) const {
    if (i < 1) return false;
    if (b[i] != b[i - 1]) return false;
    return is_consonant(i);
  }

  // cvc at i, where the second c is not w, x or y
  bool cvc(int i) const {
    if (i < 2 || !is_consonant(i) || is_consonant(i - 1) || !is_consonant(i - 2)) return false;
    char ch = b[i];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(std::string_view suffix) {
    int length = static_cast<int>(suffix.size());
    if (length > k + 1) return false;
    if (b.compare(k - length + 1, length, suffix) != 0) return false;
    j = k - length;
    return true;
  }

  void set_to(std::string_view s) {
    b.replace(j + 1, k - j, s);
    k = j + static_cast<int>(s.size());
  }

  void replace_if_m_positive(std::string_view s) {
    if (measure() > 0) set_to(s);
  }

  void step1ab() {
    if (b[k] == 's') {
      if (ends("sses")) {
        k -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (b[k - 1] != 's') {
        --k;
      }
    }
    if (ends("eed")) {
      if (measure() > 0) --k;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k = j;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_consonant(k)) {
        char ch = b[k];
        if (ch != 'l' && ch != 's' && ch != 'z') --k;
      } else {
        j = k;
        if (measure() == 1 && cvc(k)) set_to("e");
      }
    }
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b[k] = 'i';
  }

  void step2() {
    static const std::array<std::pair<std::string_view, std::string_view>, 20> rules = {{
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
    }};
    for (const auto& [suffix, replacement] : rules) {
      if (ends(suffix)) {
        replace_if_m_positive(replacement);
        return;
      }
    }
  }

  void step3() {
    static const std::array<std::pair<std::string_view, std::string_view>, 7> rules = {{
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    }};
    for (const auto& [suffix, replacement] : rules) {
      if (ends(suffix)) {
        replace_if_m_positive(replacement);
        return;
      }
    }
  }

  void step4() {
    static const std::array<std::string_view, 19> suffixes = {
        "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
        "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize"};
    for (const auto& suffix : suffixes) {
      if (!ends(suffix)) continue;
      if (suffix == "ion" && !(j >= 0 && (b[j] == 's' || b[j] == 't'))) continue;
      if (measure() > 1) k = j;
      return;
    }
  }

  void step5() {
    j = k;
    if (b[k] == 'e') {
      int m = measure();
      if (m > 1 || (m == 1 && !cvc(k - 1))) --k;
    }
    if (b[k] == 'l' && double_consonant(k) && measure() > 1) --k;
  }

  std::string run() {
    if (k <= 1) return b.substr(0, k + 1);
    step1ab();
    step1c();
    step2();
    step3();
    step4();
    step5();
    return b.substr(0, k + 1);
  }
};

}  // namespace

std::string stem(std::string_view word) {
  if (word.size() < 3) return std::string(word);
  for (char c : word) {
    if (!std::isalpha(static_cast<unsigned char>(c))) return std::string(word);
  }
  Stemmer s;
  s.b = std::string(word);
  s.k = static_cast<int>(word.size()) - 1;
  return s.run();
}

}  // namespace scr::lexfeat
