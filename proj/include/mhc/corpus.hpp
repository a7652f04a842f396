#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mhc/common.hpp"
#include "mhc/text.hpp"

namespace mhc {

struct RawRecord {
  std::string id;
  std::string statement;
  std::string status;
};

struct LoadResult {
  std::vector<RawRecord> records;
  std::size_t dropped_empty = 0;
};

/// Reads an RFC-4180 CSV with `id`, `statement` and `status` columns (any
/// order, extra columns ignored). Rows whose statement is blank are dropped and
/// counted. Duplicate ids are rejected.
LoadResult load_csv(const std::filesystem::path& path);
LoadResult parse_csv(std::string_view text);

enum class SchemeKind { binary, multiclass };

SchemeKind parse_scheme_kind(std::string_view s);
std::string_view to_string(SchemeKind kind);

class LabelScheme {
 public:
  /// Normal = 0, every other status = Abnormal = 1.
  static LabelScheme binary();
  /// Dense ids in the given order.
  static LabelScheme multiclass(std::vector<std::string> names);
  /// Distinct statuses in lexicographic order.
  static LabelScheme multiclass_from(const std::vector<RawRecord>& records);

  SchemeKind kind() const { return kind_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t num_classes() const { return names_.size(); }

  /// Throws DataError naming the status if it has no mapping.
  LabelId lookup(const std::string& status) const;

 private:
  SchemeKind kind_ = SchemeKind::binary;
  std::vector<std::string> names_;
  std::map<std::string, LabelId> mapping_;
};

std::vector<LabelId> map_labels(const std::vector<RawRecord>& records, const LabelScheme& scheme);

struct Document {
  std::string id;
  std::string raw;
  TokenList tokens;
  LabelId label = 0;
};

std::vector<Document> prepare_documents(const std::vector<RawRecord>& records,
                                        const LabelScheme& scheme, const CleanOptions& options = {});

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train, validation, test;
};

/// |test| = round(0.2 n), |validation| = round(0.25 (n - |test|)), rest train.
SplitSizes split_sizes(std::size_t n);

/// Two-step random split: draw the test set, then split the remainder 75/25.
/// Index lists are returned sorted.
DatasetSplit split_dataset(std::size_t n, std::uint64_t seed);

/// Same sizes as split_dataset, apportioned across classes by largest remainder.
DatasetSplit split_dataset_stratified(const std::vector<LabelId>& labels, std::size_t num_classes,
                                      std::uint64_t seed);

}  // namespace mhc
