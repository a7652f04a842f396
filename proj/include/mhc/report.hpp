#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhc/experiment.hpp"

namespace mhc {

struct ClassDistribution {
  std::vector<std::string> names;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  double percent(std::size_t k) const;  // 0 when the corpus is empty
};

ClassDistribution class_distribution(std::span<const LabelId> labels, const LabelScheme& scheme);
nlohmann::json to_json(const ClassDistribution& d);
ClassDistribution distribution_from_json(const nlohmann::json& j);

/// status,count,percent with percent to two decimals.
std::string distribution_csv(const ClassDistribution& d);
/// Self-contained bar chart, one bar per class in scheme order.
std::string distribution_svg(const ClassDistribution& d, const std::string& title);

/// Full search report. Status is "ok" or "no successful trials"; the resolved
/// experiment config is embedded. With a fixed clock the output is a pure
/// function of (corpus, config).
nlohmann::json search_report(const SearchResult& result, const ExperimentConfig& config, const PreparedData& data,
                             const Clock& clock);

/// Report for a corpus alone (prepare subcommand): sizes and class distribution.
nlohmann::json corpus_report(const PreparedData& data, const ExperimentConfig& config, const Clock& clock);

/// curve,fpr,tpr,threshold rows from the report's test ROC. Empty body if the
/// report has no ROC.
std::string roc_csv(const nlohmann::json& report);

/// Writes the file, creating parent directories. Throws DataError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Stable serialization used for every emitted JSON file.
std::string dump_json(const nlohmann::json& j);

}  // namespace mhc
