#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mhc/corpus.hpp"
#include "mhc/features.hpp"
#include "mhc/gbdt.hpp"
#include "mhc/gru.hpp"
#include "mhc/linear.hpp"
#include "mhc/metrics.hpp"
#include "mhc/search.hpp"
#include "mhc/svm.hpp"
#include "mhc/trees.hpp"

namespace mhc {

enum class Family { logistic, svm, rf, gbdt, gru };

Family parse_family(std::string_view s);
std::string_view to_string(Family f);
std::string_view display_name(Family f);
const std::vector<Family>& all_families();

struct SearchPlan {
  enum class Mode { grid, random };
  Mode mode = Mode::grid;
  std::size_t n_trials = 10;  // random mode only, per space
  std::vector<SearchSpace> spaces;
};

SearchPlan default_plan(Family f);

struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  std::string corpus_path;
  SchemeKind scheme = SchemeKind::binary;
  std::uint64_t seed = 42;
  bool stratified = false;
  CleanOptions clean;
  std::size_t max_features = 1000;
  NgramRange ngrams{1, 2};
  std::size_t seq_max_len = 64;
  std::size_t seq_min_freq = 2;
  std::map<std::string, SearchPlan> search;  // by family name; missing families use default_plan
  nlohmann::json overrides = nlohmann::json::object();

  const SearchPlan& plan(Family f) const;
};

/// Every family's default plan filled in.
ExperimentConfig default_experiment();
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Seed streams under the experiment seed: split uses child_seed(seed, 0..1)
/// inside the corpus module; each family owns child_seed(seed, 16 + family).
/// Within a family, stream 0 trains models and stream 1000 + s samples space s.
std::uint64_t family_seed(std::uint64_t experiment_seed, Family f);

struct DataPart {
  std::vector<std::string> ids;
  std::vector<TokenList> tokens;
  std::vector<LabelId> y;
  SparseMatrix x;
};

enum class SplitName { train, validation, test };
SplitName parse_split_name(std::string_view s);

struct PreparedData {
  LabelScheme scheme;
  std::size_t dropped_empty = 0;
  std::vector<LabelId> all_labels;
  DatasetSplit split;
  TfIdfModel tfidf;  // fit on the training part only
  DataPart train, validation, test;

  std::size_t num_classes() const { return scheme.num_classes(); }
  const DataPart& part(SplitName s) const;
};

PreparedData prepare_records(const std::vector<RawRecord>& records, const ExperimentConfig& config,
                             std::size_t dropped_empty = 0);
PreparedData prepare_experiment(const ExperimentConfig& config);

using ModelVariant = std::variant<LinearModel, SvmModel, ForestModel, GbdtModel, GruModel>;

struct TrainedModel {
  Family family = Family::logistic;
  nlohmann::json params;
  ModelVariant model;
};

/// Unknown parameter names are a UsageError.
TrainedModel train_model(Family family, const nlohmann::json& params, const PreparedData& data,
                         std::uint64_t seed, std::size_t seq_max_len = 64, std::size_t seq_min_freq = 2);

struct Predictions {
  std::vector<LabelId> labels;
  DenseMatrix scores;  // n x K; higher means more likely
};

Predictions predict(const TrainedModel& model, const DataPart& part);

struct EvaluationReport {
  std::size_t n = 0;
  ConfusionMatrix confusion;
  PrfReport prf;
  double weighted_f1 = 0.0;
  // Binary: AUROC of the class-1 score. Multiclass: micro one-vs-rest.
  std::optional<double> auroc;
  std::optional<RocCurve> roc;
  std::optional<double> macro_auroc;
  std::vector<double> per_class_auroc;
};

EvaluationReport evaluate(const Predictions& pred, std::span<const LabelId> y_true, std::size_t num_classes);
nlohmann::json to_json(const EvaluationReport& report, const LabelScheme& scheme);

struct TrialRecord {
  std::size_t index = 0;
  std::size_t space = 0;
  nlohmann::json params;
  std::uint64_t seed = 0;
  std::optional<double> validation_weighted_f1;
  std::string error;
  double seconds = 0.0;
};

struct SearchResult {
  Family family = Family::logistic;
  std::vector<TrialRecord> trials;
  std::optional<std::size_t> best;
  std::optional<EvaluationReport> test_report;
  std::optional<TrainedModel> best_model;

  bool ok() const { return best.has_value(); }
};

/// Seconds since an arbitrary origin plus an ISO-8601 timestamp.
struct Clock {
  std::function<double()> seconds;
  std::function<std::string()> timestamp;
};

Clock system_clock();
/// Always 0 s and 1970-01-01T00:00:00Z, for byte-identical reports.
Clock fixed_clock();

/// (space index, params) in trial order.
std::vector<std::pair<std::size_t, nlohmann::json>> plan_trials(const SearchPlan& plan, std::uint64_t family_seed);

/// Fits every trial on train, scores weighted F1 on validation, keeps the
/// first best, and evaluates only that model on test. Trial exceptions are
/// recorded, not thrown.
SearchResult run_search(const ExperimentConfig& config, const PreparedData& data, Family family,
                        const Clock& clock, const std::function<void(const TrialRecord&)>& on_trial = {});

/// Tuned configurations for the public corpus. Names: "tuned", and
/// "tuned-balanced" for binary logistic regression.
nlohmann::json preset(Family family, SchemeKind scheme, std::string_view name = "tuned");

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

/// Self-contained model file: model, TF-IDF vocabulary and the resolved experiment.
nlohmann::json model_file(const TrainedModel& model, const PreparedData& data, const ExperimentConfig& config);

}  // namespace mhc
