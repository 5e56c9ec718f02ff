#pragma once

#include <array>
#include <string>
#include <vector>

#include "scr/errors.hpp"

namespace scr::lexfeat {

class FeatureError : public Error {
 public:
  using Error::Error;
};

enum class Matcher { Exact, Stem };

struct MeteorParams {
  double fmean_recall_weight = 9.0;  // F = 10PR / (R + 9P)
  double penalty_gamma = 0.5;
  double penalty_beta = 3.0;
  std::vector<Matcher> matchers = {Matcher::Exact, Matcher::Stem};
};

// Unigram-alignment METEOR with fragmentation penalty, in [0, 1].
// Tokens are lowercase words (punctuation dropped); alignment is greedy
// left-to-right through the matcher stages.
double meteor(const std::string& candidate, const std::string& reference,
              const MeteorParams& params = MeteorParams{});

// Word-set Jaccard after stop-word removal; 1 when both sets are empty.
double jaccard_words(const std::string& a, const std::string& b);

// Shared unique words over the larger vocabulary; 1 when both are empty.
double overlap_ratio(const std::string& a, const std::string& b);

struct LengthFeatures {
  double char_ratio;  // min/max, 1 when equal, 0 when one side is empty
  double word_ratio;
  double char_diff;   // absolute
  double word_diff;
};

LengthFeatures length_features(const std::string& a, const std::string& b);

// Ratcliff-Obershelp similarity over characters: 2M / (|a| + |b|).
double edit_similarity(const std::string& a, const std::string& b);

struct EmbeddingFeatures {
  double cosine;
  double sts;  // (cosine + 1) / 2
  std::array<double, 10> dims_a;
  std::array<double, 10> dims_b;
};

// Requires equal-dimension vectors of dimension >= 10.
EmbeddingFeatures embedding_features(const std::vector<double>& vec_a,
                                     const std::vector<double>& vec_b);

struct StructureFeatures {
  double sentence_count_ratio;  // min/max
  double avg_sentence_len_ratio;
  double words_per_sentence_a;
  double words_per_sentence_b;
};

StructureFeatures structure_features(const std::string& a, const std::string& b);

// Coarse part-of-speech classes assigned by a closed-class lexicon plus
// suffix heuristics; a pluggable stand-in for a real tagger.
enum class CoarseTag { Noun = 0, Verb = 1, AdjAdv = 2, Function = 3, Num = 4, Other = 5 };
constexpr int kTagCount = 6;

std::vector<CoarseTag> tag_tokens(const std::vector<std::string>& tokens);

// Jensen-Shannon divergence (base 2) between tag distributions, in [0, 1].
double pos_divergence(const std::string& a, const std::string& b);

// Jaccard over POS-tag bigram multisets, in [0, 1].
double syntactic_proxy(const std::string& a, const std::string& b);

constexpr int kFeatureDim = 37;
extern const char* const kFeatureSchemaVersion;

struct FeatureVector {
  std::array<double, kFeatureDim> values;
  std::string schema_version;
};

// Column names in schema order.
const std::vector<std::string>& feature_names();

// Full Table-2 vector; embeddings supplied by the caller so the function
// stays pure. Throws FeatureError naming the feature index on any
// non-finite value.
FeatureVector extract_features(const std::string& text_a, const std::string& text_b,
                               const std::vector<double>& emb_a,
                               const std::vector<double>& emb_b,
                               const MeteorParams& params = MeteorParams{});

// The fixed stop-word list (lowercase).
const std::vector<std::string>& stopword_list();

}  // namespace scr::lexfeat
