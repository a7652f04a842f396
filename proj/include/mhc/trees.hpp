#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mhc/common.hpp"

namespace mhc {

enum class Criterion { gini, entropy };

Criterion parse_criterion(std::string_view s);
std::string_view to_string(Criterion c);

/// Knobs shared by CART, forests and boosting. max_depth < 0 means unbounded.
struct TreeConfig {
  Criterion criterion = Criterion::gini;
  int max_depth = -1;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  ClassWeightMode class_weight = ClassWeightMode::none;
  // forest
  std::size_t n_estimators = 100;
  bool bootstrap = true;
  std::size_t max_features = 0;  // features tried per split; 0 = ceil(sqrt(D))
  // boosting
  double learning_rate = 0.1;
  std::size_t num_leaves = 31;
  std::size_t min_child_samples = 20;
  std::size_t max_bins = 255;

  void validate() const;
};

/// Column-major copy of a feature matrix for split search.
class FeatureColumns {
 public:
  explicit FeatureColumns(const DenseMatrix& x);
  explicit FeatureColumns(const SparseMatrix& x);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t f) const { return data_[f * rows_ + i]; }
  std::span<const double> column(std::size_t f) const { return {data_.data() + f * rows_, rows_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Impurity of weighted class masses (counts[k] * class_weights[k]).
/// Entropy uses the natural log with 0 log 0 = 0.
double impurity(std::span<const double> counts, Criterion criterion, std::span<const double> class_weights);

struct Split {
  std::uint32_t feature = 0;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  double gain = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
};

/// Best (feature, threshold) over `features` for the node holding `samples`
/// (row ids into x; repeats count as separate draws). Thresholds are midpoints
/// between consecutive distinct values. A candidate replaces the current best
/// only when its gain is larger by more than 1e-12, so ties keep the lower
/// feature id and then the lower threshold. Returns none when no split has
/// gain > 1e-12 while leaving min_samples_leaf on both sides.
std::optional<Split> best_split(const FeatureColumns& x, std::span<const LabelId> y,
                                std::span<const std::uint32_t> samples, std::span<const std::uint32_t> features,
                                std::span<const double> class_weights, std::size_t num_classes,
                                const TreeConfig& config);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t n_samples = 0;
  double weight = 0.0;  // weighted mass
  double impurity = 0.0;
  double gain = 0.0;            // impurity decrease of the split
  std::vector<double> counts;   // unweighted class counts, sum = n_samples

  bool is_leaf() const { return feature < 0; }
};

/// Flat preorder node array; node 0 is the root.
struct DecisionTree {
  std::size_t num_classes = 2;
  std::size_t dim = 0;
  std::vector<double> class_weights;
  std::vector<TreeNode> nodes;

  std::size_t depth() const;
  std::size_t leaf_count() const;
};

DecisionTree fit_cart(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                      const TreeConfig& config);
DecisionTree fit_cart(const DenseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                      const TreeConfig& config);

/// Grows one tree on an explicit sample multiset. `feature_rng` draws the
/// per-node feature subset when `features_per_split` < D; pass null to try all.
DecisionTree grow_tree(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                       std::span<const double> class_weights, std::vector<std::uint32_t> samples,
                       std::size_t features_per_split, Rng* feature_rng, const TreeConfig& config);

const TreeNode& leaf_for(const DecisionTree& tree, std::span<const double> x);
const TreeNode& leaf_for(const DecisionTree& tree, const SparseVector& x);

/// Weighted class distribution of the leaf, normalized.
std::vector<double> predict_proba(const DecisionTree& tree, const SparseVector& x);
LabelId predict(const DecisionTree& tree, const SparseVector& x);
LabelId predict(const DecisionTree& tree, std::span<const double> x);

struct ForestModel {
  std::size_t num_classes = 2;
  std::size_t dim = 0;
  std::size_t features_per_split = 1;
  std::vector<std::uint64_t> tree_seeds;
  std::vector<DecisionTree> trees;
};

/// Bootstrap forest; tree t uses child_seed(seed, t) for its bootstrap draw
/// and feature subsets. OpenMP over trees.
ForestModel fit_forest(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                       const TreeConfig& config, std::uint64_t seed);
ForestModel fit_forest_serial(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                              const TreeConfig& config, std::uint64_t seed);

/// Majority vote of per-tree classes; ties to the lowest class id.
LabelId predict(const ForestModel& forest, const SparseVector& x);
LabelId predict(const ForestModel& forest, std::span<const double> x);
std::vector<std::size_t> votes(const ForestModel& forest, const SparseVector& x);
/// Mean of per-tree leaf distributions; a smoother ranking score than vote shares.
std::vector<double> predict_proba(const ForestModel& forest, const SparseVector& x);

/// Mean over trees of sum_nodes (w_node / w_root) * gain per feature, normalized to 1.
std::vector<double> feature_importance(const ForestModel& forest);

nlohmann::json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ForestModel& forest);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace mhc
