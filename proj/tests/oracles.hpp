// Brute-force reference implementations shared by the unit and acceptance
// tests. They recompute everything from scratch and never call the library's
// own split or ranking code.
#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "mhc/trees.hpp"

namespace mhc::test {

// Independent impurity on weighted masses.
inline double oracle_impurity(const std::vector<double>& mass, Criterion c) {
  double total = 0.0;
  for (double m : mass) total += m;
  double out = c == Criterion::gini ? 1.0 : 0.0;
  for (double m : mass) {
    const double p = m / total;
    if (c == Criterion::gini) {
      out -= p * p;
    } else if (p > 0) {
      out -= p * std::log(p);
    }
  }
  return out;
}

struct OracleSplit {
  std::uint32_t feature;
  double threshold;
  double gain;
};

// Every (feature, midpoint) pair, scored from scratch.
inline std::optional<OracleSplit> oracle_split(const DenseMatrix& x, const std::vector<LabelId>& y,
                                        const std::vector<std::uint32_t>& samples, std::size_t k,
                                        const std::vector<double>& cw, const TreeConfig& cfg) {
  auto masses = [&](auto&& pick) {
    std::vector<double> m(k, 0.0);
    std::size_t n = 0;
    for (auto i : samples) {
      if (pick(i)) {
        m[y[i]] += cw[y[i]];
        ++n;
      }
    }
    return std::pair{m, n};
  };
  const auto [parent, n] = masses([](auto) { return true; });
  double parent_total = 0.0;
  for (double v : parent) parent_total += v;
  const double parent_imp = oracle_impurity(parent, cfg.criterion);
  std::optional<OracleSplit> best;
  double best_gain = 0.0;
  for (std::uint32_t f = 0; f < x.cols(); ++f) {
    std::set<double> values;
    for (auto i : samples) values.insert(x(i, f));
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
      double t = v[j] + (v[j + 1] - v[j]) / 2.0;
      if (!(t < v[j + 1])) t = v[j];
      const auto [l, nl] = masses([&](auto i) { return x(i, f) <= t; });
      const auto [r, nr] = masses([&](auto i) { return x(i, f) > t; });
      if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
      double wl = 0.0, wr = 0.0;
      for (double q : l) wl += q;
      for (double q : r) wr += q;
      if (wl <= 0 || wr <= 0) continue;
      const double gain = parent_imp - (wl / parent_total * oracle_impurity(l, cfg.criterion) +
                                        wr / parent_total * oracle_impurity(r, cfg.criterion));
      if (gain > best_gain + 1e-12) {
        best = OracleSplit{f, t, gain};
        best_gain = gain;
      }
    }
  }
  (void)n;
  return best;
}

struct OracleNode {
  std::optional<OracleSplit> split;
  std::unique_ptr<OracleNode> left, right;
  std::vector<double> mass;
};

inline std::unique_ptr<OracleNode> oracle_tree(const DenseMatrix& x, const std::vector<LabelId>& y,
                                        const std::vector<std::uint32_t>& samples, std::size_t k,
                                        const std::vector<double>& cw, const TreeConfig& cfg, int depth) {
  auto node = std::make_unique<OracleNode>();
  node->mass.assign(k, 0.0);
  std::set<LabelId> classes;
  for (auto i : samples) {
    node->mass[y[i]] += cw[y[i]];
    classes.insert(y[i]);
  }
  const bool stop = (cfg.max_depth >= 0 && depth >= cfg.max_depth) || classes.size() < 2 ||
                    samples.size() < cfg.min_samples_split || samples.size() < 2 * cfg.min_samples_leaf;
  if (stop) return node;
  node->split = oracle_split(x, y, samples, k, cw, cfg);
  if (!node->split) return node;
  std::vector<std::uint32_t> l, r;
  for (auto i : samples) (x(i, node->split->feature) <= node->split->threshold ? l : r).push_back(i);
  node->left = oracle_tree(x, y, l, k, cw, cfg, depth + 1);
  node->right = oracle_tree(x, y, r, k, cw, cfg, depth + 1);
  return node;
}

inline LabelId oracle_predict(const OracleNode& node, std::span<const double> row) {
  if (!node.split) {
    return static_cast<LabelId>(argmax(node.mass));
  }
  return oracle_predict(row[node.split->feature] <= node.split->threshold ? *node.left : *node.right, row);
}

// Every (positive, negative) pair scores 1, 1/2 or 0.
inline double pairwise_auc(const std::vector<std::uint8_t>& y, const std::vector<double>& s) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

inline std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> s(n);
  for (std::uint32_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

inline TreeConfig random_tree_config(Rng& rng) {
  TreeConfig cfg;
  cfg.criterion = rng.bernoulli(0.5) ? Criterion::gini : Criterion::entropy;
  cfg.min_samples_leaf = 1 + rng.uniform_index(3);
  cfg.min_samples_split = 2 + rng.uniform_index(4);
  cfg.max_depth = rng.bernoulli(0.3) ? static_cast<int>(1 + rng.uniform_index(4)) : -1;
  cfg.class_weight = rng.bernoulli(0.5) ? ClassWeightMode::balanced : ClassWeightMode::none;
  return cfg;
}

}  // namespace mhc::test
