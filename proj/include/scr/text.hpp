#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scr::text {

// Strips ASCII whitespace from both ends.
std::string trim(std::string_view s);

// Collapses runs of whitespace (space, tab, newline, CR) to single spaces
// and trims the ends. Case and punctuation are preserved.
std::string normalize_whitespace(std::string_view s);

// ASCII lowercase; bytes >= 0x80 pass through untouched.
std::string to_lower(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

// True for ASCII punctuation characters.
bool is_punct(char c);

// Lowercased word tokens. A word is a maximal run of alphanumeric bytes,
// word-internal apostrophes, or bytes >= 0x80 (multi-byte UTF-8 stays
// intact). Each ASCII punctuation character becomes its own token.
std::vector<std::string> tokenize(std::string_view s);

// tokenize() minus punctuation-only tokens.
std::vector<std::string> word_tokens(std::string_view s);

// Splits into sentences on terminal punctuation (., !, ?) with a guard
// list for common abbreviations and single-letter initials. A text with
// no terminator is one sentence.
std::vector<std::string> split_sentences(std::string_view s);

// Case-insensitive substring search; npos when absent.
size_t find_ci(std::string_view haystack, std::string_view needle, size_t from = 0);

}  // namespace scr::text
