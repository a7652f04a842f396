#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mhc/common.hpp"
#include "json.hpp"

namespace mhc {

struct NgramRange {
  std::size_t min_n = 1;
  std::size_t max_n = 2;
};

/// Calls `emit(term)` for every n-gram of the document; n-grams join adjacent
/// tokens with a single space.
template <typename Emit>
void for_each_ngram(std::span<const std::string> tokens, NgramRange range, Emit&& emit) {
  std::string term;
  for (std::size_t n = range.min_n; n <= range.max_n; ++n) {
    if (tokens.size() < n) break;
    for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
      term = tokens[start];
      for (std::size_t k = 1; k < n; ++k) {
        term.push_back(' ');
        term.append(tokens[start + k]);
      }
      emit(term);
    }
  }
}

class Vocabulary {
 public:
  Vocabulary() = default;
  /// Terms are assigned column ids in the given order.
  explicit Vocabulary(std::vector<std::string> terms);

  std::optional<std::uint32_t> find(const std::string& term) const;
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct TfIdfModel {
  Vocabulary vocabulary;
  std::vector<double> idf;
  std::size_t n_docs = 0;
  NgramRange ngrams;

  std::size_t dim() const { return vocabulary.size(); }
};

/// Keeps the `max_features` most frequent n-grams by total corpus count (ties
/// lexicographic); columns are in lexicographic term order.
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
TfIdfModel fit_tfidf(std::span<const TokenList> docs, std::size_t max_features = 1000,
                     NgramRange ngrams = {});

/// Raw counts times idf, L2-normalized. Out-of-vocabulary n-grams are ignored.
SparseVector transform(const TfIdfModel& model, std::span<const std::string> doc);

/// OpenMP over documents.
SparseMatrix transform_batch(const TfIdfModel& model, std::span<const TokenList> docs);
SparseMatrix transform_batch_serial(const TfIdfModel& model, std::span<const TokenList> docs);

nlohmann::json to_json(const TfIdfModel& model);
TfIdfModel tfidf_from_json(const nlohmann::json& j);

}  // namespace mhc
