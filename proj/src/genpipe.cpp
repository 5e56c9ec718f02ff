#include "scr/genpipe.hpp"

#include <algorithm>
#include <cmath>

#include "scr/rng.hpp"
#include "scr/text.hpp"

namespace scr::genpipe {

namespace {

using answerability::AnswerableSet;
using answerability::RelationClass;
using answerability::SCRLabel;
using nlohmann::json;

std::set<std::string> universe_set(const std::vector<corpus::QAItem>& items) {
  std::set<std::string> ids;
  for (const auto& item : items) ids.insert(item.question_id);
  return ids;
}

std::string numbered_list(const std::vector<std::string>& lines) {
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    out += std::to_string(i + 1) + ". " + lines[i];
    if (i + 1 < lines.size()) out += "\n";
  }
  return out;
}

// Retry attempts must hash differently or record-mode caching would pin
// the first failing completion; the hint line carries the attempt index.
std::string with_retry_hint(const prompts::PromptLibrary& lib, const std::string& user_text,
                            int attempt) {
  if (attempt <= 1) return user_text;
  return user_text + prompts::render_text(lib.get("retry_hint").user_text,
                                          {{"attempt", std::to_string(attempt)}});
}

std::string generation_call(gateway::LlmGateway& gw, const GenConfig& cfg,
                            const std::string& system_text, const std::string& user_text) {
  gateway::CompletionRequest request{cfg.model_id, system_text, user_text, cfg.gen_temperature,
                                     cfg.gen_max_tokens};
  return text::trim(gw.complete(request));
}

// Sentence-deletion fallback: drop sentences that literally carry a
// removed question's reference answer. Only helps when the answer-bearing
// content is sentence-aligned; the caller still post-checks.
std::string delete_answer_sentences(const std::string& base,
                                    const RemovalPattern& pattern,
                                    const std::map<std::string, std::string>& references) {
  auto sentences = text::split_sentences(base);
  std::string out;
  for (const auto& sentence : sentences) {
    bool drop = false;
    for (const auto& qid : pattern.removed_ids) {
      auto it = references.find(qid);
      if (it != references.end() &&
          text::find_ci(sentence, it->second) != std::string_view::npos) {
        drop = true;
        break;
      }
    }
    if (!drop) {
      if (!out.empty()) out += " ";
      out += sentence;
    }
  }
  return out;
}

int pattern_index_of(const TextVariant& v) { return v.pattern.index; }

}  // namespace

std::string to_string(Side side) {
  return side == Side::Original ? "original" : "paraphrase";
}

std::vector<corpus::ContextRecord> filter_contexts(gateway::LlmGateway& gw,
                                                   const prompts::PromptLibrary& lib,
                                                   const GenConfig& cfg,
                                                   const std::vector<corpus::ContextRecord>& records,
                                                   std::vector<std::string>* diagnostics) {
  std::vector<corpus::ContextRecord> kept;
  for (const auto& record : records) {
    if (record.questions.size() < 5) {
      throw PreconditionError("filter_contexts: record " + record.context_id +
                              " has fewer than 5 questions");
    }
    bool all_correct = true;
    try {
      for (const auto& item : record.questions) {
        std::string answer =
            answerability::answer_question(gw, lib, cfg.qa_call(), record.passage, item.question);
        if (!answerability::judge_equivalence(gw, lib, cfg.qa_call(), item.question, answer,
                                              item.reference_answers.front())) {
          all_correct = false;
          break;
        }
      }
    } catch (const Error& ex) {
      if (diagnostics) {
        diagnostics->push_back(record.context_id + ": " + ex.what());
      }
      continue;
    }
    if (all_correct) kept.push_back(record);
  }
  return kept;
}

std::map<std::string, std::string> reference_answers(gateway::LlmGateway& gw,
                                                     const prompts::PromptLibrary& lib,
                                                     const GenConfig& cfg,
                                                     const corpus::ContextRecord& record) {
  std::map<std::string, std::string> references;
  for (const auto& item : record.questions) {
    references[item.question_id] =
        answerability::answer_question(gw, lib, cfg.qa_call(), record.passage, item.question);
  }
  return references;
}

std::string generate_paraphrase(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                                const GenConfig& cfg, const corpus::ContextRecord& record,
                                const std::map<std::string, std::string>& references) {
  const auto universe = universe_set(record.questions);
  std::string last_failure;
  for (int attempt = 1; attempt <= cfg.paraphrase_retry_budget; ++attempt) {
    std::vector<std::string> answers;
    for (const auto& item : record.questions) {
      std::string user_text =
          prompts::render_text(lib.get("paraphrase_answer").user_text,
                               {{"context", record.passage}, {"question", item.question}});
      answers.push_back(generation_call(
          gw, cfg, lib.get("paraphrase_answer").system_text,
          with_retry_hint(lib, user_text, attempt)));
    }
    std::string stitch_user = prompts::render_text(lib.get("paraphrase_stitch").user_text,
                                                   {{"answers", numbered_list(answers)}});
    std::string candidate = generation_call(gw, cfg, lib.get("paraphrase_stitch").system_text,
                                            with_retry_hint(lib, stitch_user, attempt));
    if (candidate.empty()) {
      last_failure = "empty candidate";
      continue;
    }
    double score;
    try {
      score = lexfeat::meteor(candidate, record.passage, cfg.meteor_params);
    } catch (const lexfeat::FeatureError&) {
      last_failure = "candidate has no word tokens";
      continue;
    }
    if (score >= cfg.meteor_gate) {
      last_failure = "METEOR " + std::to_string(score) + " >= gate";
      continue;
    }
    AnswerableSet measured = answerability::answerable_set(gw, lib, cfg.qa_call(), candidate,
                                                           record.questions, references);
    if (measured.ids != universe) {
      last_failure = "candidate does not keep all questions answerable";
      continue;
    }
    return candidate;
  }
  throw ParaphraseExhaustedError("paraphrase generation for " + record.context_id +
                                 " exhausted " + std::to_string(cfg.paraphrase_retry_budget) +
                                 " attempts (" + last_failure + ")");
}

std::array<RemovalPattern, 6> removal_patterns(const std::vector<std::string>& question_ids,
                                               int n) {
  if (n < 5) {
    throw PatternSizeError("removal_patterns: need at least 5 designated questions, got " +
                           std::to_string(n));
  }
  if (question_ids.size() != static_cast<size_t>(n)) {
    throw PreconditionError("removal_patterns: question_ids size " +
                            std::to_string(question_ids.size()) + " != n " + std::to_string(n));
  }

  auto nested = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    auto contains = [](const std::set<std::string>& big, const std::set<std::string>& small) {
      return std::includes(big.begin(), big.end(), small.begin(), small.end());
    };
    return contains(a, b) || contains(b, a);
  };

  std::array<RemovalPattern, 6> patterns;
  patterns[0] = RemovalPattern{0, {}};
  std::vector<std::set<std::string>> chosen;
  for (int k = 1; k <= 5; ++k) {
    // index combinations of size k in lexicographic order
    std::vector<int> combo(k);
    for (int i = 0; i < k; ++i) combo[i] = i;
    std::optional<std::set<std::string>> first_subset;
    std::optional<std::set<std::string>> picked;
    while (true) {
      std::set<std::string> subset;
      for (int idx : combo) subset.insert(question_ids[idx]);
      if (!first_subset) first_subset = subset;
      bool ok = true;
      for (const auto& previous : chosen) {
        if (nested(subset, previous)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        picked = std::move(subset);
        break;
      }
      // advance combination
      int pos = k - 1;
      while (pos >= 0 && combo[pos] == n - k + pos) --pos;
      if (pos < 0) break;
      ++combo[pos];
      for (int i = pos + 1; i < k; ++i) combo[i] = combo[i - 1] + 1;
    }
    std::set<std::string> result = picked ? *picked : *first_subset;
    chosen.push_back(result);
    patterns[k] = RemovalPattern{k, std::move(result)};
  }
  return patterns;
}

std::vector<TextVariant> make_variants(gateway::LlmGateway& gw,
                                       const prompts::PromptLibrary& lib, const GenConfig& cfg,
                                       const corpus::ContextRecord& record,
                                       const std::string& paraphrase_text,
                                       const std::map<std::string, std::string>& references,
                                       const std::array<RemovalPattern, 6>& patterns) {
  const auto universe = universe_set(record.questions);
  std::vector<TextVariant> variants;

  for (Side side : {Side::Original, Side::Paraphrase}) {
    const std::string& base = side == Side::Original ? record.passage : paraphrase_text;
    for (const auto& pattern : patterns) {
      std::set<std::string> expected;
      std::set_difference(universe.begin(), universe.end(), pattern.removed_ids.begin(),
                          pattern.removed_ids.end(), std::inserter(expected, expected.end()));

      auto check = [&](const std::string& candidate) -> std::optional<AnswerableSet> {
        if (text::trim(candidate).empty()) return std::nullopt;
        AnswerableSet measured = answerability::answerable_set(gw, lib, cfg.qa_call(), candidate,
                                                               record.questions, references);
        if (measured.ids != expected) return std::nullopt;
        return measured;
      };

      std::optional<TextVariant> made;
      if (pattern.index == 0) {
        if (auto measured = check(base)) {
          made = TextVariant{record.context_id, side, pattern, base, std::move(*measured)};
        }
      } else {
        std::vector<std::string> removed_questions;
        for (const auto& item : record.questions) {
          if (pattern.removed_ids.count(item.question_id)) {
            removed_questions.push_back(item.question);
          }
        }
        std::string user_text = prompts::render_text(
            lib.get("removal").user_text,
            {{"questions", numbered_list(removed_questions)}, {"text", base}});
        for (int attempt = 1; attempt <= cfg.variant_retry_budget && !made; ++attempt) {
          std::string candidate = generation_call(gw, cfg, lib.get("removal").system_text,
                                                  with_retry_hint(lib, user_text, attempt));
          if (auto measured = check(candidate)) {
            made = TextVariant{record.context_id, side, pattern, candidate, std::move(*measured)};
          }
        }
        if (!made) {
          std::string candidate = delete_answer_sentences(base, pattern, references);
          if (auto measured = check(candidate)) {
            made = TextVariant{record.context_id, side, pattern, candidate, std::move(*measured)};
          }
        }
      }
      if (!made) {
        throw VariantExhaustedError("variant " + to_string(side) + "/R" +
                                    std::to_string(pattern.index) + " for " + record.context_id +
                                    " failed after " + std::to_string(cfg.variant_retry_budget) +
                                    " attempts and fallback");
      }
      variants.push_back(std::move(*made));
    }
  }
  return variants;
}

std::vector<LabeledPair> generate_pairs(const std::vector<TextVariant>& variants,
                                        bool coerce_disjoint) {
  std::array<const TextVariant*, 6> original{};
  std::array<const TextVariant*, 6> paraphrase{};
  for (const auto& variant : variants) {
    int index = pattern_index_of(variant);
    if (index < 0 || index > 5) {
      throw PreconditionError("generate_pairs: pattern index out of range");
    }
    auto& slot = variant.side == Side::Original ? original : paraphrase;
    slot[index] = &variant;
  }
  for (int i = 0; i < 6; ++i) {
    if (!original[i] || !paraphrase[i]) {
      throw PreconditionError("generate_pairs: missing variant for pattern " + std::to_string(i));
    }
  }

  const std::string& source_id = variants.front().source_id;
  std::vector<LabeledPair> pairs;
  pairs.reserve(36);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      LabeledPair pair;
      pair.pair_id = source_id + ":o" + std::to_string(i) + "-p" + std::to_string(j);
      pair.source_id = source_id;
      pair.pattern_a = i;
      pair.pattern_b = j;
      pair.text_a = original[i]->text;
      pair.text_b = paraphrase[j]->text;
      if (i == j) {
        pair.construction_label = SCRLabel::Equivalence;
      } else if (i == 0) {
        pair.construction_label = SCRLabel::InclusionAContainsB;
      } else if (j == 0) {
        pair.construction_label = SCRLabel::InclusionBContainsA;
      } else {
        pair.construction_label = SCRLabel::SemanticOverlap;
      }
      pair.algebra_label = answerability::relation_of(original[i]->measured_set,
                                                      paraphrase[j]->measured_set,
                                                      coerce_disjoint);
      pair.agreement = (*pair.algebra_label == pair.construction_label);
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

SourceBundle build_source_bundle(gateway::LlmGateway& gw, const prompts::PromptLibrary& lib,
                                 const GenConfig& cfg, const corpus::ContextRecord& record) {
  SourceBundle bundle;
  bundle.context = corpus::select_questions(record, cfg.n_questions);
  bundle.references = reference_answers(gw, lib, cfg, bundle.context);
  bundle.paraphrase_text = generate_paraphrase(gw, lib, cfg, bundle.context, bundle.references);
  bundle.paraphrase_meteor =
      lexfeat::meteor(bundle.paraphrase_text, bundle.context.passage, cfg.meteor_params);
  std::vector<std::string> ids;
  for (const auto& item : bundle.context.questions) ids.push_back(item.question_id);
  auto patterns = removal_patterns(ids, cfg.n_questions);
  bundle.variants = make_variants(gw, lib, cfg, bundle.context, bundle.paraphrase_text,
                                  bundle.references, patterns);
  bundle.pairs = generate_pairs(bundle.variants, cfg.coerce_disjoint);
  return bundle;
}

SplitResult split_dataset(
    const std::vector<std::pair<std::string, answerability::RelationClass>>& labeled_ids,
    double ratio, uint64_t seed) {
  if (labeled_ids.empty()) {
    throw PreconditionError("split_dataset: no pairs");
  }
  if (ratio <= 0.0 || ratio >= 1.0) {
    throw PreconditionError("split_dataset: ratio must be in (0,1)");
  }

  std::array<std::vector<size_t>, 3> by_class;
  for (size_t i = 0; i < labeled_ids.size(); ++i) {
    by_class[static_cast<int>(labeled_ids[i].second)].push_back(i);
  }
  for (int c = 0; c < 3; ++c) {
    if (by_class[c].empty()) {
      throw EmptyClassError("split_dataset: class '" +
                            answerability::to_string(static_cast<RelationClass>(c)) +
                            "' has no pairs");
    }
  }

  const double test_fraction = 1.0 - ratio;
  const double total_quota = test_fraction * static_cast<double>(labeled_ids.size());
  const long test_total = static_cast<long>(std::ceil(total_quota - 1e-9));

  std::array<long, 3> test_counts{};
  std::array<double, 3> remainders{};
  long allocated = 0;
  for (int c = 0; c < 3; ++c) {
    double quota = test_fraction * static_cast<double>(by_class[c].size());
    test_counts[c] = static_cast<long>(std::floor(quota + 1e-9));
    remainders[c] = quota - static_cast<double>(test_counts[c]);
    allocated += test_counts[c];
  }
  // largest remainder toward the exact global test size; ties by class order
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int lhs, int rhs) { return remainders[lhs] > remainders[rhs]; });
  for (int i = 0; allocated < test_total && i < 3; ++i) {
    int c = order[i];
    if (test_counts[c] < static_cast<long>(by_class[c].size())) {
      ++test_counts[c];
      ++allocated;
    }
  }

  std::vector<bool> in_test(labeled_ids.size(), false);
  for (int c = 0; c < 3; ++c) {
    std::vector<size_t> indices = by_class[c];
    SplitMix64 rng(derive_seed(seed, static_cast<uint64_t>(c)));
    deterministic_shuffle(indices, rng);
    for (long i = 0; i < test_counts[c]; ++i) in_test[indices[i]] = true;
  }

  SplitResult result;
  for (size_t i = 0; i < labeled_ids.size(); ++i) {
    (in_test[i] ? result.test_ids : result.train_ids).push_back(labeled_ids[i].first);
  }
  return result;
}

nlohmann::json validate_dataset(const std::vector<SourceBundle>& bundles, const GenConfig& cfg,
                                embedding::EmbeddingProvider* provider) {
  json per_pair = json::array();
  json per_source = json::array();
  long agree_total = 0;
  long pair_total = 0;
  std::map<std::string, std::array<long, 2>> per_label;  // label -> {agree, total}
  bool cosine_degraded = false;

  for (const auto& bundle : bundles) {
    per_source.push_back({{"source_id", bundle.context.context_id},
                          {"paraphrase_meteor", bundle.paraphrase_meteor},
                          {"meteor_below_gate", bundle.paraphrase_meteor < cfg.meteor_gate}});
    for (const auto& pair : bundle.pairs) {
      ++pair_total;
      bool agree = pair.agreement.value_or(false);
      if (agree) ++agree_total;
      std::string cls = answerability::to_string(pair.relation_class());
      ++per_label[cls][1];
      if (agree) ++per_label[cls][0];

      json entry = {{"pair_id", pair.pair_id},
                    {"construction_label", answerability::to_string(pair.construction_label)},
                    {"algebra_label", pair.algebra_label
                                          ? json(answerability::to_string(*pair.algebra_label))
                                          : json(nullptr)},
                    {"agreement", agree}};
      if (provider) {
        try {
          auto features =
              lexfeat::embedding_features(provider->embed(pair.text_a), provider->embed(pair.text_b));
          entry["embedding_cosine"] = features.cosine;
        } catch (const Error&) {
          cosine_degraded = true;
        }
      }
      per_pair.push_back(std::move(entry));
    }
  }

  json label_breakdown = json::object();
  for (const auto& [label, counts] : per_label) {
    label_breakdown[label] = {{"pairs", counts[1]},
                              {"agreements", counts[0]},
                              {"rate", counts[1] ? static_cast<double>(counts[0]) / counts[1] : 0.0}};
  }
  return {{"n_sources", bundles.size()},
          {"n_pairs", pair_total},
          {"agreement_rate", pair_total ? static_cast<double>(agree_total) / pair_total : 0.0},
          {"per_label", label_breakdown},
          {"per_source", per_source},
          {"per_pair", per_pair},
          {"coerce_disjoint", cfg.coerce_disjoint},
          {"meteor_gate", cfg.meteor_gate},
          {"cosine_available", provider != nullptr && !cosine_degraded},
          {"cosine_degraded", cosine_degraded}};
}

nlohmann::json variant_to_json(const TextVariant& variant) {
  return {{"source_id", variant.source_id},
          {"side", to_string(variant.side)},
          {"pattern_index", variant.pattern.index},
          {"removed_ids", variant.pattern.removed_ids},
          {"text", variant.text},
          {"measured_set", variant.measured_set.ids},
          {"universe", variant.measured_set.universe}};
}

TextVariant variant_from_json(const nlohmann::json& j) {
  TextVariant variant;
  variant.source_id = j.at("source_id").get<std::string>();
  variant.side = j.at("side").get<std::string>() == "original" ? Side::Original : Side::Paraphrase;
  variant.pattern.index = j.at("pattern_index").get<int>();
  variant.pattern.removed_ids = j.at("removed_ids").get<std::set<std::string>>();
  variant.text = j.at("text").get<std::string>();
  variant.measured_set.ids = j.at("measured_set").get<std::set<std::string>>();
  variant.measured_set.universe = j.at("universe").get<std::vector<std::string>>();
  return variant;
}

nlohmann::json pair_to_json(const LabeledPair& pair) {
  return {{"pair_id", pair.pair_id},
          {"source_id", pair.source_id},
          {"text_a", pair.text_a},
          {"text_b", pair.text_b},
          {"label", answerability::to_string(pair.relation_class())},
          {"algebra_label", pair.algebra_label
                                ? json(answerability::to_string(*pair.algebra_label))
                                : json(nullptr)},
          {"agreement", pair.agreement ? json(*pair.agreement) : json(nullptr)}};
}

LabeledPair pair_from_json(const nlohmann::json& j) {
  LabeledPair pair;
  pair.pair_id = j.at("pair_id").get<std::string>();
  pair.source_id = j.at("source_id").get<std::string>();
  pair.text_a = j.at("text_a").get<std::string>();
  pair.text_b = j.at("text_b").get<std::string>();
  // grid coordinates are encoded in the pair id: <source>:o<i>-p<j>
  auto colon = pair.pair_id.rfind(":o");
  auto dash = pair.pair_id.rfind("-p");
  if (colon == std::string::npos || dash == std::string::npos || dash <= colon) {
    throw Error("malformed pair_id: " + pair.pair_id);
  }
  pair.pattern_a = std::stoi(pair.pair_id.substr(colon + 2, dash - colon - 2));
  pair.pattern_b = std::stoi(pair.pair_id.substr(dash + 2));
  auto cls = answerability::class_from_string(j.at("label").get<std::string>());
  if (cls == RelationClass::Equivalence) {
    pair.construction_label = SCRLabel::Equivalence;
  } else if (cls == RelationClass::Inclusion) {
    pair.construction_label =
        pair.pattern_a == 0 ? SCRLabel::InclusionAContainsB : SCRLabel::InclusionBContainsA;
  } else {
    pair.construction_label = SCRLabel::SemanticOverlap;
  }
  if (j.contains("algebra_label") && !j.at("algebra_label").is_null()) {
    pair.algebra_label = answerability::label_from_string(j.at("algebra_label").get<std::string>());
  }
  if (j.contains("agreement") && !j.at("agreement").is_null()) {
    pair.agreement = j.at("agreement").get<bool>();
  }
  return pair;
}

}  // namespace scr::genpipe
