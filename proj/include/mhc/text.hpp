#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_set>

#include "mhc/common.hpp"

namespace mhc {

struct CleanOptions {
  // Drop "#word" entirely instead of keeping the word without its marker.
  bool drop_hashtags = false;
};

/// Strips URLs, HTML tags, @mentions, hashtag markers and any character other
/// than ASCII letters, digits, whitespace and apostrophes. Whitespace runs are
/// collapsed and the result is trimmed. Idempotent.
std::string clean_text(std::string_view raw, const CleanOptions& options = {});

/// Whitespace split, lowercase, stopword removal, then rule-based lemmatization.
/// Expects clean_text output.
TokenList normalize(std::string_view cleaned);

/// Frozen English stopword list (the NLTK 179-word list).
const std::unordered_set<std::string>& stopwords();
bool is_stopword(std::string_view token);

// Suffix rule: if the word ends with `suffix` and the remaining stem has at
// least `min_stem` characters and a vowel, replace the suffix.
struct SuffixRule {
  std::string_view suffix;
  std::string_view replacement;
  std::size_t min_stem;
  // Undouble a trailing consonant pair, or restore a silent 'e' on a short
  // consonant-vowel-consonant stem.
  bool repair_stem;
};

struct ExceptionEntry {
  std::string_view word;
  std::string_view lemma;
};

struct LemmaRules {
  std::string_view version;
  std::span<const SuffixRule> suffixes;
  // Stems that must not lose a trailing 's' ("always", "focus").
  std::span<const std::string_view> keep_s_endings;
  std::span<const ExceptionEntry> exceptions;
};

const LemmaRules& lemma_rules();

/// Lowercase input expected. Applies the exception table, else the first
/// matching suffix rule.
std::string lemmatize(std::string_view word);

}  // namespace mhc
