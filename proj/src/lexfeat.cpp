#include "scr/lexfeat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "scr/stemmer.hpp"
#include "scr/text.hpp"

namespace scr::lexfeat {

namespace {

std::set<std::string> word_set(const std::string& s) {
  auto words = text::word_tokens(s);
  return {words.begin(), words.end()};
}

double min_max_ratio(double a, double b) {
  if (a == 0.0 && b == 0.0) return 1.0;
  if (a == 0.0 || b == 0.0) return 0.0;
  return std::min(a, b) / std::max(a, b);
}

const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> set(stopword_list().begin(),
                                                   stopword_list().end());
  return set;
}

// Greedy left-to-right unigram alignment: candidate position -> reference
// position, staged matchers applied in order.
std::vector<int> align(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                       const std::vector<Matcher>& matchers) {
  std::vector<int> match(cand.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  for (Matcher matcher : matchers) {
    std::vector<std::string> cand_keys(cand.size()), ref_keys(ref.size());
    for (size_t i = 0; i < cand.size(); ++i) {
      cand_keys[i] = matcher == Matcher::Exact ? cand[i] : stem(cand[i]);
    }
    for (size_t j = 0; j < ref.size(); ++j) {
      ref_keys[j] = matcher == Matcher::Exact ? ref[j] : stem(ref[j]);
    }
    for (size_t i = 0; i < cand.size(); ++i) {
      if (match[i] >= 0) continue;
      for (size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j]) continue;
        if (cand_keys[i] == ref_keys[j]) {
          match[i] = static_cast<int>(j);
          ref_used[j] = true;
          break;
        }
      }
    }
  }
  return match;
}

int count_chunks(const std::vector<int>& match) {
  int chunks = 0;
  int prev_cand = -2;
  int prev_ref = -2;
  for (size_t i = 0; i < match.size(); ++i) {
    if (match[i] < 0) continue;
    if (static_cast<int>(i) != prev_cand + 1 || match[i] != prev_ref + 1) ++chunks;
    prev_cand = static_cast<int>(i);
    prev_ref = match[i];
  }
  return chunks;
}

using TagBigram = std::pair<CoarseTag, CoarseTag>;

std::map<TagBigram, int> tag_bigrams(const std::string& s) {
  auto tags = tag_tokens(text::word_tokens(s));
  std::map<TagBigram, int> bigrams;
  for (size_t i = 0; i + 1 < tags.size(); ++i) {
    ++bigrams[{tags[i], tags[i + 1]}];
  }
  return bigrams;
}

std::array<double, kTagCount> tag_distribution(const std::string& s) {
  auto tags = tag_tokens(text::word_tokens(s));
  std::array<double, kTagCount> dist{};
  for (CoarseTag tag : tags) dist[static_cast<int>(tag)] += 1.0;
  double total = 0;
  for (double v : dist) total += v;
  if (total > 0) {
    for (double& v : dist) v /= total;
  }
  return dist;
}

double js_divergence(const std::array<double, kTagCount>& p,
                     const std::array<double, kTagCount>& q) {
  double jsd = 0.0;
  for (int i = 0; i < kTagCount; ++i) {
    double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) jsd += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) jsd += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::max(0.0, jsd);
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() &&
         w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

const std::unordered_set<std::string>& function_words() {
  static const std::unordered_set<std::string> words = {
      "the", "a", "an", "of", "in", "on", "at", "by", "for", "with", "to", "from", "and",
      "or", "but", "nor", "if", "while", "because", "although", "though", "unless", "until",
      "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do",
      "does", "did", "will", "would", "can", "could", "shall", "should", "may", "might",
      "must", "he", "she", "it", "they", "we", "you", "i", "him", "her", "them", "us", "me",
      "his", "hers", "its", "their", "our", "your", "my", "mine", "ours", "yours", "theirs",
      "this", "that", "these", "those", "as", "than", "then", "so", "not", "no", "there",
      "here", "what", "which", "who", "whom", "whose", "when", "where", "why", "how", "all",
      "each", "every", "some", "any", "both", "either", "neither", "into", "onto", "over",
      "under", "about", "after", "before", "between", "during", "through", "up", "down",
      "out", "off", "above", "below", "again", "further", "once", "per", "via", "upon"};
  return words;
}

}  // namespace

const char* const kFeatureSchemaVersion = "1";

double meteor(const std::string& candidate, const std::string& reference,
              const MeteorParams& params) {
  if (params.fmean_recall_weight <= 0 || params.penalty_gamma <= 0 || params.penalty_beta <= 0) {
    throw PreconditionError("meteor: parameters must be strictly positive");
  }
  if (params.matchers.empty()) {
    throw PreconditionError("meteor: matcher stages must be non-empty");
  }
  auto cand = text::word_tokens(candidate);
  auto ref = text::word_tokens(reference);
  if (cand.empty() || ref.empty()) {
    throw FeatureError("meteor: texts must tokenize to at least one token");
  }

  auto match = align(cand, ref, params.matchers);
  int m = static_cast<int>(std::count_if(match.begin(), match.end(), [](int x) { return x >= 0; }));
  if (m == 0) return 0.0;

  double precision = static_cast<double>(m) / static_cast<double>(cand.size());
  double recall = static_cast<double>(m) / static_cast<double>(ref.size());
  double w = params.fmean_recall_weight;
  double fmean = (w + 1.0) * precision * recall / (recall + w * precision);
  double chunks = count_chunks(match);
  double penalty = params.penalty_gamma * std::pow(chunks / static_cast<double>(m),
                                                   params.penalty_beta);
  return fmean * (1.0 - penalty);
}

double jaccard_words(const std::string& a, const std::string& b) {
  std::set<std::string> sa, sb;
  for (auto& w : text::word_tokens(a)) {
    if (!stopword_set().count(w)) sa.insert(std::move(w));
  }
  for (auto& w : text::word_tokens(b)) {
    if (!stopword_set().count(w)) sb.insert(std::move(w));
  }
  if (sa.empty() && sb.empty()) return 1.0;
  size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double overlap_ratio(const std::string& a, const std::string& b) {
  auto sa = word_set(a);
  auto sb = word_set(b);
  if (sa.empty() && sb.empty()) return 1.0;
  if (sa.empty() || sb.empty()) return 0.0;
  size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  return static_cast<double>(inter) / static_cast<double>(std::max(sa.size(), sb.size()));
}

LengthFeatures length_features(const std::string& a, const std::string& b) {
  double chars_a = static_cast<double>(a.size());
  double chars_b = static_cast<double>(b.size());
  double words_a = static_cast<double>(text::word_tokens(a).size());
  double words_b = static_cast<double>(text::word_tokens(b).size());
  return {min_max_ratio(chars_a, chars_b), min_max_ratio(words_a, words_b),
          std::abs(chars_a - chars_b), std::abs(words_a - words_b)};
}

double edit_similarity(const std::string& a_in, const std::string& b_in) {
  if (a_in.empty() && b_in.empty()) return 1.0;
  if (a_in.empty() || b_in.empty()) return 0.0;
  // block-selection ties depend on argument order; canonicalize so the
  // similarity is symmetric
  const std::string& a = a_in <= b_in ? a_in : b_in;
  const std::string& b = a_in <= b_in ? b_in : a_in;

  // positions of each byte in b, for the longest-matching-block scan
  std::array<std::vector<int>, 256> positions;
  for (int j = 0; j < static_cast<int>(b.size()); ++j) {
    positions[static_cast<unsigned char>(b[j])].push_back(j);
  }

  // longest block within [alo,ahi) x [blo,bhi); ties go to the smallest
  // (i, j), matching the classic recursive formulation
  auto longest_block = [&](int alo, int ahi, int blo, int bhi) {
    std::map<int, int> j2len;
    int best_i = alo, best_j = blo, best_size = 0;
    for (int i = alo; i < ahi; ++i) {
      std::map<int, int> new_j2len;
      for (int j : positions[static_cast<unsigned char>(a[i])]) {
        if (j < blo) continue;
        if (j >= bhi) break;
        auto it = j2len.find(j - 1);
        int k = (it == j2len.end() ? 0 : it->second) + 1;
        new_j2len[j] = k;
        if (k > best_size) {
          best_i = i - k + 1;
          best_j = j - k + 1;
          best_size = k;
        }
      }
      j2len.swap(new_j2len);
    }
    return std::array<int, 3>{best_i, best_j, best_size};
  };

  long matched = 0;
  std::vector<std::array<int, 4>> stack{{0, static_cast<int>(a.size()), 0,
                                         static_cast<int>(b.size())}};
  while (!stack.empty()) {
    auto [alo, ahi, blo, bhi] = stack.back();
    stack.pop_back();
    if (alo >= ahi || blo >= bhi) continue;
    auto [i, j, size] = longest_block(alo, ahi, blo, bhi);
    if (size == 0) continue;
    matched += size;
    stack.push_back({alo, i, blo, j});
    stack.push_back({i + size, ahi, j + size, bhi});
  }
  return 2.0 * static_cast<double>(matched) / static_cast<double>(a.size() + b.size());
}

EmbeddingFeatures embedding_features(const std::vector<double>& vec_a,
                                     const std::vector<double>& vec_b) {
  if (vec_a.size() != vec_b.size()) {
    throw FeatureError("embedding_features: dimension mismatch (" + std::to_string(vec_a.size()) +
                       " vs " + std::to_string(vec_b.size()) + ")");
  }
  if (vec_a.size() < 10) {
    throw FeatureError("embedding_features: need at least 10 dimensions");
  }
  double dot = 0, norm_a = 0, norm_b = 0;
  for (size_t i = 0; i < vec_a.size(); ++i) {
    dot += vec_a[i] * vec_b[i];
    norm_a += vec_a[i] * vec_a[i];
    norm_b += vec_b[i] * vec_b[i];
  }
  double denom = std::sqrt(norm_a) * std::sqrt(norm_b);
  double cosine = denom > 0 ? dot / denom : 0.0;
  cosine = std::clamp(cosine, -1.0, 1.0);
  EmbeddingFeatures out;
  out.cosine = cosine;
  out.sts = (cosine + 1.0) / 2.0;
  for (int i = 0; i < 10; ++i) {
    out.dims_a[i] = vec_a[i];
    out.dims_b[i] = vec_b[i];
  }
  return out;
}

StructureFeatures structure_features(const std::string& a, const std::string& b) {
  auto sents_a = text::split_sentences(a);
  auto sents_b = text::split_sentences(b);
  double count_a = static_cast<double>(sents_a.size());
  double count_b = static_cast<double>(sents_b.size());
  double words_a = static_cast<double>(text::word_tokens(a).size());
  double words_b = static_cast<double>(text::word_tokens(b).size());
  double wps_a = count_a > 0 ? words_a / count_a : 0.0;
  double wps_b = count_b > 0 ? words_b / count_b : 0.0;
  return {min_max_ratio(count_a, count_b), min_max_ratio(wps_a, wps_b), wps_a, wps_b};
}

std::vector<CoarseTag> tag_tokens(const std::vector<std::string>& tokens) {
  std::vector<CoarseTag> tags;
  tags.reserve(tokens.size());
  for (const auto& token : tokens) {
    if (token.empty()) {
      tags.push_back(CoarseTag::Other);
      continue;
    }
    bool numeric = true;
    bool has_digit = false;
    for (char c : token) {
      unsigned char u = static_cast<unsigned char>(c);
      if (std::isdigit(u)) {
        has_digit = true;
      } else if (c != '.' && c != ',') {
        numeric = false;
        break;
      }
    }
    if (numeric && has_digit) {
      tags.push_back(CoarseTag::Num);
      continue;
    }
    if (token.size() == 1 && text::is_punct(token[0])) {
      tags.push_back(CoarseTag::Other);
      continue;
    }
    if (function_words().count(token)) {
      tags.push_back(CoarseTag::Function);
      continue;
    }
    if (ends_with(token, "ly")) {
      tags.push_back(CoarseTag::AdjAdv);
    } else if (ends_with(token, "ing") || ends_with(token, "ed") || ends_with(token, "ize") ||
               ends_with(token, "ise") || ends_with(token, "ify") || ends_with(token, "ate")) {
      tags.push_back(CoarseTag::Verb);
    } else if (ends_with(token, "ous") || ends_with(token, "ful") || ends_with(token, "less") ||
               ends_with(token, "able") || ends_with(token, "ible") || ends_with(token, "ive") ||
               ends_with(token, "ic") || ends_with(token, "al") || ends_with(token, "est")) {
      tags.push_back(CoarseTag::AdjAdv);
    } else {
      // nouns dominate open-class vocabulary; default there
      tags.push_back(CoarseTag::Noun);
    }
  }
  return tags;
}

double pos_divergence(const std::string& a, const std::string& b) {
  auto tokens_a = text::word_tokens(a);
  auto tokens_b = text::word_tokens(b);
  if (tokens_a.empty() && tokens_b.empty()) return 0.0;
  if (tokens_a.empty() || tokens_b.empty()) return 1.0;
  return js_divergence(tag_distribution(a), tag_distribution(b));
}

double syntactic_proxy(const std::string& a, const std::string& b) {
  auto bigrams_a = tag_bigrams(a);
  auto bigrams_b = tag_bigrams(b);
  if (bigrams_a.empty() && bigrams_b.empty()) return 1.0;
  long inter = 0, uni = 0;
  auto it_a = bigrams_a.begin();
  auto it_b = bigrams_b.begin();
  while (it_a != bigrams_a.end() || it_b != bigrams_b.end()) {
    if (it_b == bigrams_b.end() || (it_a != bigrams_a.end() && it_a->first < it_b->first)) {
      uni += it_a->second;
      ++it_a;
    } else if (it_a == bigrams_a.end() || it_b->first < it_a->first) {
      uni += it_b->second;
      ++it_b;
    } else {
      inter += std::min(it_a->second, it_b->second);
      uni += std::max(it_a->second, it_b->second);
      ++it_a;
      ++it_b;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "meteor_ab",        "meteor_ba",        "jaccard",          "overlap_ratio",
      "char_len_ratio",   "word_len_ratio",   "char_len_diff",    "word_len_diff",
      "edit_similarity",  "embedding_cosine", "sts_score",        "emb_a_0",
      "emb_a_1",          "emb_a_2",          "emb_a_3",          "emb_a_4",
      "emb_a_5",          "emb_a_6",          "emb_a_7",          "emb_a_8",
      "emb_a_9",          "emb_b_0",          "emb_b_1",          "emb_b_2",
      "emb_b_3",          "emb_b_4",          "emb_b_5",          "emb_b_6",
      "emb_b_7",          "emb_b_8",          "emb_b_9",          "sentence_count_ratio",
      "avg_sentence_len_ratio", "words_per_sentence_a", "words_per_sentence_b",
      "pos_divergence",   "syntactic_proxy"};
  return names;
}

FeatureVector extract_features(const std::string& text_a, const std::string& text_b,
                               const std::vector<double>& emb_a, const std::vector<double>& emb_b,
                               const MeteorParams& params) {
  if (text::trim(text_a).empty() || text::trim(text_b).empty()) {
    throw PreconditionError("extract_features: texts must be non-empty");
  }
  FeatureVector fv;
  fv.schema_version = kFeatureSchemaVersion;
  auto& v = fv.values;
  v[0] = meteor(text_a, text_b, params);
  v[1] = meteor(text_b, text_a, params);
  v[2] = jaccard_words(text_a, text_b);
  v[3] = overlap_ratio(text_a, text_b);
  LengthFeatures len = length_features(text_a, text_b);
  v[4] = len.char_ratio;
  v[5] = len.word_ratio;
  v[6] = len.char_diff;
  v[7] = len.word_diff;
  v[8] = edit_similarity(text_a, text_b);
  EmbeddingFeatures emb = embedding_features(emb_a, emb_b);
  v[9] = emb.cosine;
  v[10] = emb.sts;
  for (int i = 0; i < 10; ++i) {
    v[11 + i] = emb.dims_a[i];
    v[21 + i] = emb.dims_b[i];
  }
  StructureFeatures structure = structure_features(text_a, text_b);
  v[31] = structure.sentence_count_ratio;
  v[32] = structure.avg_sentence_len_ratio;
  v[33] = structure.words_per_sentence_a;
  v[34] = structure.words_per_sentence_b;
  v[35] = pos_divergence(text_a, text_b);
  v[36] = syntactic_proxy(text_a, text_b);
  for (int i = 0; i < kFeatureDim; ++i) {
    if (!std::isfinite(v[i])) {
      throw FeatureError("non-finite value at feature index " + std::to_string(i) + " (" +
                         feature_names()[i] + ")");
    }
  }
  return fv;
}

const std::vector<std::string>& stopword_list() {
  static const std::vector<std::string> words = {
      "a",      "about",  "above",  "after",  "again",   "against", "all",    "am",
      "an",     "and",    "any",    "are",    "as",      "at",      "be",     "because",
      "been",   "before", "being",  "below",  "between", "both",    "but",    "by",
      "can",    "could",  "did",    "do",     "does",    "doing",   "down",   "during",
      "each",   "few",    "for",    "from",   "further", "had",     "has",    "have",
      "having", "he",     "her",    "here",   "hers",    "herself", "him",    "himself",
      "his",    "how",    "i",      "if",     "in",      "into",    "is",     "it",
      "its",    "itself", "just",   "me",     "more",    "most",    "my",     "myself",
      "no",     "nor",    "not",    "now",    "of",      "off",     "on",     "once",
      "only",   "or",     "other",  "our",    "ours",    "out",     "over",   "own",
      "same",   "she",    "should", "so",     "some",    "such",    "than",   "that",
      "the",    "their",  "theirs", "them",   "then",    "there",   "these",  "they",
      "this",   "those",  "through", "to",    "too",     "under",   "until",  "up",
      "very",   "was",    "we",     "were",   "what",    "when",    "where",  "which",
      "while",  "who",    "whom",   "why",    "will",    "with",    "would",  "you",
      "your",   "yours",  "yourself"};
  return words;
}

}  // namespace scr::lexfeat
