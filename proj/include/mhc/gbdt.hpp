#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mhc/common.hpp"
#include "mhc/trees.hpp"

namespace mhc {

/// Per-feature quantized training matrix. bin(x) = number of edges strictly
/// below x, so bin <= b exactly when x <= edges[b].
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> edges;  // strictly increasing, at most max_bins - 1 per feature
  std::vector<std::uint8_t> bins;          // column-major

  std::uint8_t at(std::size_t i, std::size_t f) const { return bins[f * rows + i]; }
  std::size_t num_bins(std::size_t f) const { return edges[f].size() + 1; }
};

/// With at most max_bins distinct values, edges are the midpoints between
/// them; otherwise midpoints at equal-count quantile cut points.
std::vector<double> bin_edges(std::vector<double> values, std::size_t max_bins);
BinnedMatrix bin_features(const FeatureColumns& x, std::size_t max_bins = 255);
std::size_t bin_of(std::span<const double> edges, double v);

struct BinStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

using Histogram = std::vector<std::vector<BinStats>>;  // [feature][bin]

/// Gradient/hessian sums per (feature, bin) over `samples`. OpenMP over features.
Histogram build_histogram(const BinnedMatrix& x, std::span<const double> g, std::span<const double> h,
                          std::span<const std::uint32_t> samples);
Histogram build_histogram_serial(const BinnedMatrix& x, std::span<const double> g, std::span<const double> h,
                                 std::span<const std::uint32_t> samples);

/// Row-major list of the entries whose bin differs from their feature's
/// zero-value bin. TF-IDF rows are short, so a node's histogram costs
/// O(entries in its rows) instead of O(rows x features).
struct SparseBinIndex {
  std::vector<std::uint8_t> default_bin;  // bin_of(edges[f], 0)
  std::vector<std::size_t> row_ptr;       // rows + 1
  std::vector<std::uint32_t> feature;
  std::vector<std::uint8_t> bin;

  static SparseBinIndex build(const BinnedMatrix& x);
};

/// Same bins as build_histogram; each default bin is the node total minus the
/// other bins, so it agrees only up to rounding.
Histogram build_histogram_sparse(const BinnedMatrix& x, const SparseBinIndex& index, std::span<const double> g,
                                 std::span<const double> h, std::span<const std::uint32_t> samples);

struct HistSplit {
  std::uint32_t feature = 0;
  std::uint32_t bin = 0;  // left child takes bins 0..bin
  double gain = 0.0;
  BinStats left;
  BinStats right;
};

/// Newton gain GL^2/(HL+l) + GR^2/(HR+l) - GP^2/(HP+l), scanned over bins.
/// Both children need min_child_samples samples; a candidate must beat the
/// current best by more than 1e-12 (ties keep lower feature, then lower bin).
std::optional<HistSplit> best_histogram_split(const Histogram& hist, double lambda, std::size_t min_child_samples);

struct GbdtNode {
  int feature = -1;  // -1 marks a leaf
  std::uint32_t bin = 0;
  double threshold = 0.0;  // x <= threshold goes left; equals edges[feature][bin]
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate
  std::size_t count = 0;
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct GbdtTree {
  std::vector<GbdtNode> nodes;
  std::size_t leaf_count() const;
  std::size_t depth() const;
};

struct GbdtModel {
  std::size_t num_classes = 2;
  std::size_t dim = 0;
  double learning_rate = 0.1;
  std::size_t num_leaves = 31;
  double lambda = 1e-3;
  std::vector<double> base_score;           // 1 entry (binary) or K
  std::vector<std::vector<GbdtTree>> rounds;  // 1 tree per round (binary) or K
  std::vector<std::vector<double>> edges;
  std::vector<double> class_weights;

  std::size_t outputs() const { return num_classes == 2 ? 1 : num_classes; }
};

struct GbdtTrace {
  std::vector<double> loss;  // weighted mean log-loss; entry 0 is the base score
};

inline constexpr double kLeafLambda = 1e-3;

/// Leaf-wise Newton boosting on binned features. Binary uses one sigmoid
/// output; K > 2 grows one tree per class per round on softmax derivatives.
GbdtModel fit_gbdt(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                   const TreeConfig& config, GbdtTrace* trace = nullptr);

/// Raw scores (logits) before the link function.
std::vector<double> raw_scores(const GbdtModel& model, const SparseVector& x);
std::vector<double> raw_scores(const GbdtModel& model, std::span<const double> x);
std::vector<double> predict_proba(const GbdtModel& model, const SparseVector& x);
LabelId predict(const GbdtModel& model, const SparseVector& x);

/// Weighted mean log-loss of raw scores `f` (n x outputs, row-major).
double gbdt_loss(std::span<const double> f, std::span<const LabelId> y, std::size_t num_classes,
                 std::span<const double> class_weights);

nlohmann::json to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(const nlohmann::json& j);

}  // namespace mhc
