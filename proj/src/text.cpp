#include "mhc/text.hpp"

#include <algorithm>
#include <cctype>

namespace mhc {
namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }
bool is_kept_char(unsigned char c) { return (c < 0x80 && std::isalnum(c)) || c == '\''; }
bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool starts_with_icase(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[pos + k])) != prefix[k]) return false;
  }
  return true;
}

// Length of an HTML tag starting at `pos`, or 0. A tag opens with '<' followed
// by a letter, '/' or '!', and closes at the next '>' with no '<' in between.
std::size_t html_tag_length(std::string_view s, std::size_t pos) {
  if (pos + 1 >= s.size() || s[pos] != '<') return 0;
  const unsigned char first = static_cast<unsigned char>(s[pos + 1]);
  if (!(std::isalpha(first) || first == '/' || first == '!')) return 0;
  for (std::size_t k = pos + 1; k < s.size(); ++k) {
    if (s[k] == '>') return k - pos + 1;
    if (s[k] == '<') return 0;
  }
  return 0;
}

std::size_t skip_non_space(std::string_view s, std::size_t pos) {
  while (pos < s.size() && !is_space(static_cast<unsigned char>(s[pos]))) ++pos;
  return pos;
}

std::size_t skip_word(std::string_view s, std::size_t pos) {
  while (pos < s.size() && is_word_char(static_cast<unsigned char>(s[pos]))) ++pos;
  return pos;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view stem) {
  return std::any_of(stem.begin(), stem.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

void repair_stem(std::string& stem) {
  const std::size_t n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) &&
      stem[n - 1] != 'l' && stem[n - 1] != 's' && stem[n - 1] != 'z') {
    stem.pop_back();
    return;
  }
  if (n == 3 && !is_vowel(stem[0]) && is_vowel(stem[1]) && !is_vowel(stem[2]) &&
      stem[2] != 'w' && stem[2] != 'x' && stem[2] != 'y') {
    stem.push_back('e');
  }
}

}  // namespace

std::string clean_text(std::string_view raw, const CleanOptions& options) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  auto emit = [&](char c) {
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  };

  std::size_t i = 0;
  while (i < raw.size()) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    const bool at_boundary = i == 0 || !is_word_char(static_cast<unsigned char>(raw[i - 1]));

    if (c == '<') {
      if (std::size_t len = html_tag_length(raw, i); len > 0) {
        i += len;
        pending_space = true;
        continue;
      }
    }
    if (at_boundary && (starts_with_icase(raw, i, "http://") || starts_with_icase(raw, i, "https://") ||
                        starts_with_icase(raw, i, "www."))) {
      i = skip_non_space(raw, i);
      pending_space = true;
      continue;
    }
    if (c == '@' && i + 1 < raw.size() && is_word_char(static_cast<unsigned char>(raw[i + 1]))) {
      i = skip_word(raw, i + 1);
      pending_space = true;
      continue;
    }
    if (c == '#') {
      if (options.drop_hashtags && i + 1 < raw.size() &&
          is_word_char(static_cast<unsigned char>(raw[i + 1]))) {
        i = skip_word(raw, i + 1);
      } else {
        ++i;
      }
      pending_space = true;
      continue;
    }
    // U+2019 RIGHT SINGLE QUOTATION MARK is a common apostrophe in scraped text.
    if (c == 0xE2 && i + 2 < raw.size() && static_cast<unsigned char>(raw[i + 1]) == 0x80 &&
        static_cast<unsigned char>(raw[i + 2]) == 0x99) {
      emit('\'');
      i += 3;
      continue;
    }
    if (is_kept_char(c)) {
      emit(static_cast<char>(c));
    } else {
      pending_space = true;
    }
    ++i;
  }
  return out;
}

std::string lemmatize(std::string_view word) {
  const LemmaRules& rules = lemma_rules();
  for (const auto& e : rules.exceptions) {
    if (e.word == word) return std::string(e.lemma);
  }
  for (const auto& rule : rules.suffixes) {
    if (!word.ends_with(rule.suffix)) continue;
    std::string_view stem = word.substr(0, word.size() - rule.suffix.size());
    // The vowel test sees the replacement too, so cries -> cry qualifies.
    if (stem.size() < rule.min_stem || !(has_vowel(stem) || has_vowel(rule.replacement))) continue;
    if (rule.suffix == "s") {
      const bool keep = std::any_of(rules.keep_s_endings.begin(), rules.keep_s_endings.end(),
                                    [&](std::string_view ending) { return word.ends_with(ending); });
      if (keep) return std::string(word);
    }
    std::string lemma(stem);
    if (rule.repair_stem) repair_stem(lemma);
    lemma.append(rule.replacement);
    return lemma;
  }
  return std::string(word);
}

TokenList normalize(std::string_view cleaned) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && is_space(static_cast<unsigned char>(cleaned[i]))) ++i;
    const std::size_t start = i;
    while (i < cleaned.size() && !is_space(static_cast<unsigned char>(cleaned[i]))) ++i;
    if (i == start) break;

    std::string token(cleaned.substr(start, i - start));
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (is_stopword(token)) continue;

    // Quotes around a word and possessive 's do not change its lemma.
    if (token.size() > 2 && token.ends_with("'s")) token.resize(token.size() - 2);
    const auto first = token.find_first_not_of('\'');
    if (first == std::string::npos) continue;
    const auto last = token.find_last_not_of('\'');
    token = token.substr(first, last - first + 1);
    if (is_stopword(token)) continue;

    std::string lemma = lemmatize(token);
    if (lemma.empty() || is_stopword(lemma)) continue;
    tokens.push_back(std::move(lemma));
  }
  return tokens;
}

}  // namespace mhc
