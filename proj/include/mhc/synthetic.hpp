#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mhc/corpus.hpp"

namespace mhc {

/// Keyword-separable toy corpus. Each status draws keywords from its own
/// list; every document also carries shared filler words and some noise
/// (URLs, mentions, capitals, punctuation).
struct SyntheticSpec {
  std::size_t n = 2000;
  std::vector<std::pair<std::string, double>> classes;  // status, proportion
  std::uint64_t seed = 7;
  std::size_t min_tokens = 8;
  std::size_t max_tokens = 20;
  double keyword_rate = 0.35;
  bool noise = true;
};

/// Normal 35%, Depression 65%.
SyntheticSpec binary_synthetic_spec(std::size_t n = 2000, std::uint64_t seed = 7);
/// Seven statuses in roughly the public corpus's proportions.
SyntheticSpec multiclass_synthetic_spec(std::size_t n = 2000, std::uint64_t seed = 7);

/// round(p_k n) per class, fixed up by largest remainder so the counts sum to n.
std::vector<std::size_t> exact_counts(const std::vector<double>& proportions, std::size_t n);

std::vector<RawRecord> generate_corpus(const SyntheticSpec& spec);

/// Keyword list of a status known to the generator; empty for unknown statuses.
const std::vector<std::string>& synthetic_keywords(const std::string& status);
const std::vector<std::string>& synthetic_filler();

/// RFC-4180 CSV with header id,statement,status.
std::string to_csv(const std::vector<RawRecord>& records);

}  // namespace mhc
