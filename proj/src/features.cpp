#include "mhc/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace mhc {

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary term: " + terms_[i]);
    }
  }
}

std::optional<std::uint32_t> Vocabulary::find(const std::string& term) const {
  const auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TfIdfModel fit_tfidf(std::span<const TokenList> docs, std::size_t max_features, NgramRange ngrams) {
  if (docs.empty()) throw DataError("fit_tfidf: empty corpus");
  if (ngrams.min_n < 1 || ngrams.max_n < ngrams.min_n) throw UsageError("invalid n-gram range");

  struct Stats {
    std::size_t count = 0;
    std::size_t df = 0;
    std::size_t last_doc = SIZE_MAX;
  };
  std::unordered_map<std::string, Stats> stats;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for_each_ngram(docs[d], ngrams, [&](const std::string& term) {
      Stats& s = stats[term];
      ++s.count;
      if (s.last_doc != d) {
        ++s.df;
        s.last_doc = d;
      }
    });
  }

  std::vector<std::pair<const std::string*, const Stats*>> ranked;
  ranked.reserve(stats.size());
  for (const auto& [term, s] : stats) ranked.emplace_back(&term, &s);
  auto by_frequency = [](const auto& a, const auto& b) {
    if (a.second->count != b.second->count) return a.second->count > b.second->count;
    return *a.first < *b.first;
  };
  const std::size_t keep = std::min(max_features, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                    by_frequency);
  ranked.resize(keep);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });

  std::vector<std::string> terms;
  std::vector<double> idf;
  terms.reserve(keep);
  idf.reserve(keep);
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, s] : ranked) {
    terms.push_back(*term);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(s->df))) + 1.0);
  }
  return TfIdfModel{Vocabulary(std::move(terms)), std::move(idf), docs.size(), ngrams};
}

SparseVector transform(const TfIdfModel& model, std::span<const std::string> doc) {
  std::map<std::uint32_t, double> counts;
  for_each_ngram(doc, model.ngrams, [&](const std::string& term) {
    if (auto col = model.vocabulary.find(term)) counts[*col] += 1.0;
  });
  SparseVector v;
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [col, count] : counts) {
    const double w = count * model.idf[col];
    v.indices.push_back(col);
    v.values.push_back(w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v.values) x *= inv;
  }
  return v;
}

SparseMatrix transform_batch(const TfIdfModel& model, std::span<const TokenList> docs) {
  SparseMatrix out;
  out.cols = model.dim();
  out.rows.resize(docs.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < docs.size(); ++i) out.rows[i] = transform(model, docs[i]);
  return out;
}

SparseMatrix transform_batch_serial(const TfIdfModel& model, std::span<const TokenList> docs) {
  SparseMatrix out;
  out.cols = model.dim();
  out.rows.reserve(docs.size());
  for (const auto& doc : docs) out.rows.push_back(transform(model, doc));
  return out;
}

nlohmann::json to_json(const TfIdfModel& model) {
  return {{"terms", model.vocabulary.terms()},
          {"idf", model.idf},
          {"n_docs", model.n_docs},
          {"ngram_range", {model.ngrams.min_n, model.ngrams.max_n}}};
}

TfIdfModel tfidf_from_json(const nlohmann::json& j) {
  TfIdfModel m;
  m.vocabulary = Vocabulary(j.at("terms").get<std::vector<std::string>>());
  m.idf = j.at("idf").get<std::vector<double>>();
  m.n_docs = j.at("n_docs").get<std::size_t>();
  const auto range = j.at("ngram_range").get<std::vector<std::size_t>>();
  if (range.size() != 2) throw DataError("tfidf json: ngram_range must have two entries");
  m.ngrams = {range[0], range[1]};
  if (m.idf.size() != m.vocabulary.size()) throw DataError("tfidf json: idf length does not match terms");
  return m;
}

}  // namespace mhc
