#include "mhc/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mhc {
namespace {

constexpr double kMinGain = 1e-12;

template <typename Lookup>
const TreeNode& descend(const DecisionTree& tree, Lookup&& lookup) {
  const TreeNode* node = &tree.nodes.at(0);
  while (!node->is_leaf()) {
    const double v = lookup(static_cast<std::uint32_t>(node->feature));
    node = &tree.nodes[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

std::vector<double> weighted_distribution(const DecisionTree& tree, const TreeNode& leaf) {
  std::vector<double> p(tree.num_classes, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] = leaf.counts[k] * tree.class_weights[k];
  if (total > 0.0) {
    for (double& v : p) v /= total;
  }
  return p;
}

LabelId leaf_class(const DecisionTree& tree, const TreeNode& leaf) {
  std::vector<double> mass(tree.num_classes);
  for (std::size_t k = 0; k < mass.size(); ++k) mass[k] = leaf.counts[k] * tree.class_weights[k];
  return static_cast<LabelId>(argmax(mass));
}

double weighted_mass(std::span<const double> counts, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) s += counts[k] * w[k];
  return s;
}

struct Grower {
  const FeatureColumns& x;
  std::span<const LabelId> y;
  std::size_t num_classes;
  std::span<const double> weights;
  std::size_t features_per_split;
  Rng* rng;
  const TreeConfig& config;
  std::vector<std::uint32_t> feature_pool;
  std::vector<TreeNode> nodes;

  std::vector<std::uint32_t> pick_features() {
    if (rng == nullptr || features_per_split >= feature_pool.size()) return feature_pool;
    const std::size_t d = feature_pool.size();
    for (std::size_t j = 0; j < features_per_split; ++j) {
      std::swap(feature_pool[j], feature_pool[j + rng->uniform_index(d - j)]);
    }
    std::vector<std::uint32_t> chosen(feature_pool.begin(),
                                      feature_pool.begin() + static_cast<std::ptrdiff_t>(features_per_split));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  int build(std::vector<std::uint32_t> samples, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    {
      TreeNode& node = nodes.back();
      node.counts.assign(num_classes, 0.0);
      for (auto i : samples) node.counts[y[i]] += 1.0;
      node.n_samples = samples.size();
      node.weight = weighted_mass(node.counts, weights);
      node.impurity = impurity(node.counts, config.criterion, weights);
    }
    const TreeNode& node = nodes.back();
    const auto classes_present = std::count_if(node.counts.begin(), node.counts.end(), [](double c) { return c > 0; });
    const bool depth_capped = config.max_depth >= 0 && depth >= config.max_depth;
    if (depth_capped || classes_present <= 1 || samples.size() < config.min_samples_split ||
        samples.size() < 2 * config.min_samples_leaf) {
      return id;
    }
    const auto features = pick_features();
    const auto split = best_split(x, y, samples, features, weights, num_classes, config);
    if (!split) return id;

    std::vector<std::uint32_t> left, right;
    left.reserve(split->n_left);
    right.reserve(split->n_right);
    const auto column = x.column(split->feature);
    for (auto i : samples) (column[i] <= split->threshold ? left : right).push_back(i);
    samples = {};

    nodes[id].feature = static_cast<int>(split->feature);
    nodes[id].threshold = split->threshold;
    nodes[id].gain = split->gain;
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

std::size_t resolve_features_per_split(const TreeConfig& config, std::size_t d) {
  std::size_t m = config.max_features;
  if (m == 0) m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(d, 1));
}

DecisionTree fit_one_tree(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                          std::span<const double> weights, std::size_t m, const TreeConfig& config,
                          std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = x.rows();
  std::vector<std::uint32_t> samples(n);
  if (config.bootstrap) {
    for (auto& s : samples) s = static_cast<std::uint32_t>(rng.uniform_index(n));
    std::sort(samples.begin(), samples.end());
  } else {
    std::iota(samples.begin(), samples.end(), 0u);
  }
  return grow_tree(x, y, num_classes, weights, std::move(samples), m, m < x.cols() ? &rng : nullptr, config);
}

void check_inputs(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes) {
  if (x.rows() != y.size()) throw std::invalid_argument("trees: X and y differ in length");
  if (x.rows() == 0) throw DataError("trees: empty training set");
  for (LabelId label : y) {
    if (label >= num_classes) throw std::invalid_argument("trees: label out of range");
  }
}

ForestModel fit_forest_impl(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                            const TreeConfig& config, std::uint64_t seed, bool parallel) {
  config.validate();
  check_inputs(x, y, num_classes);
  ForestModel forest;
  forest.num_classes = num_classes;
  forest.dim = x.cols();
  forest.features_per_split = resolve_features_per_split(config, x.cols());
  const auto weights = class_weights(y, num_classes, config.class_weight);
  const std::size_t t_count = config.n_estimators;
  forest.tree_seeds.resize(t_count);
  for (std::size_t t = 0; t < t_count; ++t) forest.tree_seeds[t] = child_seed(seed, t);
  forest.trees.resize(t_count);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t t = 0; t < t_count; ++t) {
      forest.trees[t] = fit_one_tree(x, y, num_classes, weights, forest.features_per_split, config,
                                     forest.tree_seeds[t]);
    }
  } else {
    for (std::size_t t = 0; t < t_count; ++t) {
      forest.trees[t] = fit_one_tree(x, y, num_classes, weights, forest.features_per_split, config,
                                     forest.tree_seeds[t]);
    }
  }
  return forest;
}

}  // namespace

Criterion parse_criterion(std::string_view s) {
  if (s == "gini") return Criterion::gini;
  if (s == "entropy") return Criterion::entropy;
  throw UsageError("unknown split criterion: " + std::string(s));
}

std::string_view to_string(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

void TreeConfig::validate() const {
  if (min_samples_split < 2) throw UsageError("min_samples_split must be at least 2");
  if (min_samples_leaf < 1) throw UsageError("min_samples_leaf must be at least 1");
  if (n_estimators < 1) throw UsageError("n_estimators must be at least 1");
  if (!(learning_rate > 0)) throw UsageError("learning_rate must be positive");
  if (num_leaves < 2) throw UsageError("num_leaves must be at least 2");
  if (min_child_samples < 1) throw UsageError("min_child_samples must be at least 1");
  if (max_bins < 2 || max_bins > 255) throw UsageError("max_bins must be in [2, 255]");
}

FeatureColumns::FeatureColumns(const DenseMatrix& x) : rows_(x.rows()), cols_(x.cols()), data_(rows_ * cols_) {
  require_finite(x);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t f = 0; f < cols_; ++f) data_[f * rows_ + i] = x(i, f);
  }
}

FeatureColumns::FeatureColumns(const SparseMatrix& x)
    : rows_(x.rows.size()), cols_(x.cols), data_(rows_ * cols_, 0.0) {
  require_finite(x);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto& r = x.rows[i];
    for (std::size_t t = 0; t < r.indices.size(); ++t) data_[r.indices[t] * rows_ + i] = r.values[t];
  }
}

double impurity(std::span<const double> counts, Criterion criterion, std::span<const double> class_weights) {
  const double total = weighted_mass(counts, class_weights);
  if (!(total > 0.0)) throw std::invalid_argument("impurity: empty node");
  double out = criterion == Criterion::gini ? 1.0 : 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double p = counts[k] * class_weights[k] / total;
    if (criterion == Criterion::gini) {
      out -= p * p;
    } else if (p > 0.0) {
      out -= p * std::log(p);
    }
  }
  return criterion == Criterion::gini ? std::max(0.0, out) : out;
}

std::optional<Split> best_split(const FeatureColumns& x, std::span<const LabelId> y,
                                std::span<const std::uint32_t> samples, std::span<const std::uint32_t> features,
                                std::span<const double> class_weights, std::size_t num_classes,
                                const TreeConfig& config) {
  const std::size_t n = samples.size();
  if (n < 2) return std::nullopt;
  std::vector<double> parent(num_classes, 0.0);
  for (auto i : samples) parent[y[i]] += 1.0;
  const double parent_mass = weighted_mass(parent, class_weights);
  const double parent_impurity = impurity(parent, config.criterion, class_weights);
  const std::size_t min_leaf = config.min_samples_leaf;

  // Nonzero values are sorted individually; all zeros travel as one block
  // (label == num_classes) since they can never be separated.
  struct Item {
    double value;
    LabelId label;
  };
  std::vector<Item> items;
  std::vector<double> zeros(num_classes), left(num_classes), right(num_classes);
  std::optional<Split> best;
  double best_gain = 0.0;

  for (auto f : features) {
    const auto column = x.column(f);
    items.clear();
    std::fill(zeros.begin(), zeros.end(), 0.0);
    std::size_t zero_n = 0;
    for (auto i : samples) {
      const double v = column[i];
      if (v == 0.0) {
        zeros[y[i]] += 1.0;
        ++zero_n;
      } else {
        items.push_back({v, y[i]});
      }
    }
    if (zero_n > 0) items.push_back({0.0, static_cast<LabelId>(num_classes)});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.value < b.value; });

    std::fill(left.begin(), left.end(), 0.0);
    std::size_t n_left = 0;
    for (std::size_t j = 0; j + 1 < items.size(); ++j) {
      if (items[j].label == num_classes) {
        for (std::size_t k = 0; k < num_classes; ++k) left[k] += zeros[k];
        n_left += zero_n;
      } else {
        left[items[j].label] += 1.0;
        ++n_left;
      }
      const double lo = items[j].value;
      const double hi = items[j + 1].value;
      if (!(lo < hi)) continue;
      const std::size_t n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      for (std::size_t k = 0; k < num_classes; ++k) right[k] = parent[k] - left[k];
      const double wl = weighted_mass(left, class_weights);
      const double wr = weighted_mass(right, class_weights);
      if (!(wl > 0.0) || !(wr > 0.0)) continue;
      const double gain = parent_impurity - (wl / parent_mass * impurity(left, config.criterion, class_weights) +
                                             wr / parent_mass * impurity(right, config.criterion, class_weights));
      if (gain > best_gain + kMinGain) {
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold < hi)) threshold = lo;
        best = Split{f, threshold, gain, n_left, n_right};
        best_gain = gain;
      }
    }
  }
  return best;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t out = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out = std::max(out, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return out;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

DecisionTree grow_tree(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                       std::span<const double> class_weights, std::vector<std::uint32_t> samples,
                       std::size_t features_per_split, Rng* feature_rng, const TreeConfig& config) {
  if (samples.empty()) throw DataError("grow_tree: no samples");
  Grower g{x, y, num_classes, class_weights, features_per_split, feature_rng, config, {}, {}};
  g.feature_pool.resize(x.cols());
  std::iota(g.feature_pool.begin(), g.feature_pool.end(), 0u);
  g.build(std::move(samples), 0);
  DecisionTree tree;
  tree.num_classes = num_classes;
  tree.dim = x.cols();
  tree.class_weights.assign(class_weights.begin(), class_weights.end());
  tree.nodes = std::move(g.nodes);
  return tree;
}

DecisionTree fit_cart(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                      const TreeConfig& config) {
  config.validate();
  check_inputs(x, y, num_classes);
  const auto weights = class_weights(y, num_classes, config.class_weight);
  std::vector<std::uint32_t> samples(x.rows());
  std::iota(samples.begin(), samples.end(), 0u);
  return grow_tree(x, y, num_classes, weights, std::move(samples), x.cols(), nullptr, config);
}

DecisionTree fit_cart(const DenseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                      const TreeConfig& config) {
  return fit_cart(FeatureColumns(x), y, num_classes, config);
}

const TreeNode& leaf_for(const DecisionTree& tree, std::span<const double> x) {
  if (x.size() != tree.dim) throw std::invalid_argument("tree predict: dimension mismatch");
  return descend(tree, [&](std::uint32_t f) { return x[f]; });
}

const TreeNode& leaf_for(const DecisionTree& tree, const SparseVector& x) {
  if (!x.indices.empty() && x.indices.back() >= tree.dim) {
    throw std::invalid_argument("tree predict: feature index beyond model dimension");
  }
  return descend(tree, [&](std::uint32_t f) { return x.get(f); });
}

std::vector<double> predict_proba(const DecisionTree& tree, const SparseVector& x) {
  return weighted_distribution(tree, leaf_for(tree, x));
}

LabelId predict(const DecisionTree& tree, const SparseVector& x) { return leaf_class(tree, leaf_for(tree, x)); }

LabelId predict(const DecisionTree& tree, std::span<const double> x) {
  return leaf_class(tree, leaf_for(tree, x));
}

ForestModel fit_forest(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                       const TreeConfig& config, std::uint64_t seed) {
  return fit_forest_impl(x, y, num_classes, config, seed, true);
}

ForestModel fit_forest_serial(const FeatureColumns& x, std::span<const LabelId> y, std::size_t num_classes,
                              const TreeConfig& config, std::uint64_t seed) {
  return fit_forest_impl(x, y, num_classes, config, seed, false);
}

std::vector<std::size_t> votes(const ForestModel& forest, const SparseVector& x) {
  std::vector<std::size_t> v(forest.num_classes, 0);
  for (const auto& tree : forest.trees) ++v[predict(tree, x)];
  return v;
}

namespace {

LabelId vote_winner(const std::vector<std::size_t>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return static_cast<LabelId>(best);
}

}  // namespace

LabelId predict(const ForestModel& forest, const SparseVector& x) { return vote_winner(votes(forest, x)); }

LabelId predict(const ForestModel& forest, std::span<const double> x) {
  std::vector<std::size_t> v(forest.num_classes, 0);
  for (const auto& tree : forest.trees) ++v[predict(tree, x)];
  return vote_winner(v);
}

std::vector<double> predict_proba(const ForestModel& forest, const SparseVector& x) {
  std::vector<double> p(forest.num_classes, 0.0);
  for (const auto& tree : forest.trees) {
    const auto q = predict_proba(tree, x);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += q[k];
  }
  for (double& v : p) v /= static_cast<double>(std::max<std::size_t>(forest.trees.size(), 1));
  return p;
}

std::vector<double> feature_importance(const ForestModel& forest) {
  std::vector<double> imp(forest.dim, 0.0);
  for (const auto& tree : forest.trees) {
    const double root = tree.nodes.at(0).weight;
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) imp[static_cast<std::size_t>(node.feature)] += node.weight / root * node.gain;
    }
  }
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0) {
    for (double& v : imp) v /= total;
  }
  return imp;
}

nlohmann::json to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json jn = {{"n", n.n_samples}, {"impurity", n.impurity}, {"counts", n.counts}};
    if (!n.is_leaf()) {
      jn["feature"] = n.feature;
      jn["threshold"] = n.threshold;
      jn["left"] = n.left;
      jn["right"] = n.right;
      jn["gain"] = n.gain;
    }
    nodes.push_back(std::move(jn));
  }
  return {{"num_classes", tree.num_classes}, {"dim", tree.dim}, {"class_weights", tree.class_weights},
          {"nodes", nodes}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree tree;
  tree.num_classes = j.at("num_classes").get<std::size_t>();
  tree.dim = j.at("dim").get<std::size_t>();
  tree.class_weights = j.at("class_weights").get<std::vector<double>>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.n_samples = jn.at("n").get<std::size_t>();
    n.impurity = jn.at("impurity").get<double>();
    n.counts = jn.at("counts").get<std::vector<double>>();
    if (jn.contains("feature")) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
      n.gain = jn.at("gain").get<double>();
    }
    n.weight = weighted_mass(n.counts, tree.class_weights);
    tree.nodes.push_back(std::move(n));
  }
  const auto count = static_cast<int>(tree.nodes.size());
  for (const auto& n : tree.nodes) {
    if (!n.is_leaf() && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count)) {
      throw DataError("tree json: child index out of range");
    }
  }
  if (tree.nodes.empty()) throw DataError("tree json: no nodes");
  return tree;
}

nlohmann::json to_json(const ForestModel& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : forest.trees) trees.push_back(to_json(t));
  return {{"num_classes", forest.num_classes},
          {"dim", forest.dim},
          {"features_per_split", forest.features_per_split},
          {"tree_seeds", forest.tree_seeds},
          {"trees", trees}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
  ForestModel f;
  f.num_classes = j.at("num_classes").get<std::size_t>();
  f.dim = j.at("dim").get<std::size_t>();
  f.features_per_split = j.at("features_per_split").get<std::size_t>();
  f.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
  for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
  return f;
}

}  // namespace mhc
