#include "mhc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace mhc {
namespace {

struct CsvRow {
  std::size_t line;
  std::vector<std::string> fields;
};

std::vector<CsvRow> parse_rows(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<CsvRow> rows;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool quoted = false;
  bool closed_quote = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    quoted = false;
    closed_quote = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = fields.size() == 1 && fields[0].empty();
    if (!blank) rows.push_back({row_line, std::move(fields)});
    fields.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
          closed_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !quoted) {
          in_quotes = true;
          quoted = true;
        } else {
          throw DataError("line " + std::to_string(line) + ": stray quote inside unquoted field");
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        if (closed_quote) {
          throw DataError("line " + std::to_string(line) + ": text after closing quote");
        }
        field.push_back(c);
    }
  }
  if (in_quotes) throw DataError("line " + std::to_string(row_line) + ": unterminated quoted field");
  if (!field.empty() || !fields.empty() || quoted) end_row();
  return rows;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t find_column(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) == name) return c;
  }
  return header.size();
}

}  // namespace

LoadResult parse_csv(std::string_view text) {
  auto rows = parse_rows(text);
  if (rows.empty()) throw DataError("csv: missing header row");
  const auto& header = rows.front().fields;

  std::size_t id_col = find_column(header, "id");
  if (id_col == header.size() && !header.empty() && trim(header[0]).empty()) id_col = 0;
  const std::size_t statement_col = find_column(header, "statement");
  const std::size_t status_col = find_column(header, "status");
  for (auto [col, name] : {std::pair{id_col, "id"}, {statement_col, "statement"}, {status_col, "status"}}) {
    if (col == header.size()) throw DataError(std::string("csv: missing required column '") + name + "'");
  }

  LoadResult result;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      throw DataError("line " + std::to_string(row.line) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(row.fields.size()));
    }
    RawRecord rec{trim(row.fields[id_col]), std::move(row.fields[statement_col]), trim(row.fields[status_col])};
    if (trim(rec.statement).empty()) {
      ++result.dropped_empty;
      continue;
    }
    if (rec.id.empty()) throw DataError("line " + std::to_string(row.line) + ": empty id");
    if (rec.status.empty()) throw DataError("line " + std::to_string(row.line) + ": empty status");
    if (!seen.insert(rec.id).second) {
      throw DataError("line " + std::to_string(row.line) + ": duplicate id '" + rec.id + "'");
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

LoadResult load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

SchemeKind parse_scheme_kind(std::string_view s) {
  if (s == "binary") return SchemeKind::binary;
  if (s == "multiclass") return SchemeKind::multiclass;
  throw UsageError("unknown label scheme: " + std::string(s));
}

std::string_view to_string(SchemeKind kind) { return kind == SchemeKind::binary ? "binary" : "multiclass"; }

LabelScheme LabelScheme::binary() {
  LabelScheme s;
  s.kind_ = SchemeKind::binary;
  s.names_ = {"Normal", "Abnormal"};
  s.mapping_ = {{"Normal", 0}};
  return s;
}

LabelScheme LabelScheme::multiclass(std::vector<std::string> names) {
  if (names.size() < 2) throw UsageError("multiclass scheme needs at least two classes");
  LabelScheme s;
  s.kind_ = SchemeKind::multiclass;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (!s.mapping_.emplace(names[k], static_cast<LabelId>(k)).second) {
      throw UsageError("duplicate class name in scheme: " + names[k]);
    }
  }
  s.names_ = std::move(names);
  return s;
}

LabelScheme LabelScheme::multiclass_from(const std::vector<RawRecord>& records) {
  std::set<std::string> distinct;
  for (const auto& r : records) distinct.insert(r.status);
  return multiclass({distinct.begin(), distinct.end()});
}

LabelId LabelScheme::lookup(const std::string& status) const {
  if (kind_ == SchemeKind::binary) return status == "Normal" ? 0 : 1;
  const auto it = mapping_.find(status);
  if (it == mapping_.end()) throw DataError("unknown status label: " + status);
  return it->second;
}

std::vector<LabelId> map_labels(const std::vector<RawRecord>& records, const LabelScheme& scheme) {
  std::vector<LabelId> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(scheme.lookup(r.status));
  return labels;
}

std::vector<Document> prepare_documents(const std::vector<RawRecord>& records, const LabelScheme& scheme,
                                        const CleanOptions& options) {
  const auto labels = map_labels(records, scheme);
  std::vector<Document> docs(records.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < records.size(); ++i) {
    docs[i].id = records[i].id;
    docs[i].raw = records[i].statement;
    docs[i].tokens = normalize(clean_text(records[i].statement, options));
    docs[i].label = labels[i];
  }
  return docs;
}

SplitSizes split_sizes(std::size_t n) {
  const auto test = static_cast<std::size_t>(std::llround(0.20 * static_cast<double>(n)));
  const auto validation = static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(n - test)));
  return {n - test - validation, validation, test};
}

DatasetSplit split_dataset(std::size_t n, std::uint64_t seed) {
  const SplitSizes sizes = split_sizes(n);
  if (n < 5 || sizes.train == 0 || sizes.validation == 0 || sizes.test == 0) {
    throw DataError("corpus of " + std::to_string(n) + " documents is too small to split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Rng first(child_seed(seed, 0));
  first.shuffle(order);
  DatasetSplit split;
  split.seed = seed;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes.test));

  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(sizes.test), order.end());
  std::sort(rest.begin(), rest.end());
  Rng second(child_seed(seed, 1));
  second.shuffle(rest);
  split.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(sizes.validation));
  split.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(sizes.validation), rest.end());

  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

// Largest-remainder apportionment of `total` proportional to `weights`;
// remainder ties go to the lower class id.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
  const double sum = static_cast<double>(std::accumulate(weights.begin(), weights.end(), std::size_t{0}));
  std::vector<std::size_t> quota(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = sum > 0 ? static_cast<double>(total) * static_cast<double>(weights[k]) / sum : 0.0;
    quota[k] = std::min(weights[k], static_cast<std::size_t>(std::floor(exact)));
    assigned += quota[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size() * 2; ++r) {
    const std::size_t k = remainders[r % remainders.size()].second;
    if (quota[k] < weights[k]) {
      ++quota[k];
      ++assigned;
    }
  }
  return quota;
}

}  // namespace

DatasetSplit split_dataset_stratified(const std::vector<LabelId>& labels, std::size_t num_classes,
                                      std::uint64_t seed) {
  const std::size_t n = labels.size();
  const SplitSizes sizes = split_sizes(n);
  if (n < 5 || sizes.train == 0 || sizes.validation == 0 || sizes.test == 0) {
    throw DataError("corpus of " + std::to_string(n) + " documents is too small to split");
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < n; ++i) by_class.at(labels[i]).push_back(i);

  std::vector<std::size_t> counts(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) counts[k] = by_class[k].size();
  const auto test_quota = apportion(sizes.test, counts);
  std::vector<std::size_t> remaining(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) remaining[k] = counts[k] - test_quota[k];
  const auto val_quota = apportion(sizes.validation, remaining);

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < num_classes; ++k) {
    Rng rng(child_seed(seed, 16 + k));
    rng.shuffle(by_class[k]);
    auto it = by_class[k].begin();
    split.test.insert(split.test.end(), it, it + static_cast<std::ptrdiff_t>(test_quota[k]));
    it += static_cast<std::ptrdiff_t>(test_quota[k]);
    split.validation.insert(split.validation.end(), it, it + static_cast<std::ptrdiff_t>(val_quota[k]));
    it += static_cast<std::ptrdiff_t>(val_quota[k]);
    split.train.insert(split.train.end(), it, by_class[k].end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace mhc
