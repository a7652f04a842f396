#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "doctest.h"
#include "mhc/trees.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mhc;
using namespace mhc::test;

TEST_CASE("impurity values") {
  const std::vector<double> ones{1.0, 1.0};
  CHECK(impurity(std::vector<double>{10, 0}, Criterion::gini, ones) == 0.0);
  CHECK(impurity(std::vector<double>{5, 5}, Criterion::gini, ones) == doctest::Approx(0.5));
  CHECK(impurity(std::vector<double>{5, 5}, Criterion::entropy, ones) == doctest::Approx(std::log(2.0)));
  CHECK(impurity(std::vector<double>{10, 0}, Criterion::entropy, ones) == 0.0);
  // Weights act on the counts: (2, 6) with weights (3, 1) is balanced.
  CHECK(impurity(std::vector<double>{2, 6}, Criterion::gini, std::vector<double>{3, 1}) == doctest::Approx(0.5));
  CHECK_THROWS(impurity(std::vector<double>{0, 0}, Criterion::gini, ones));
}

TEST_CASE("best_split basics") {
  DenseMatrix x(6, 3);
  std::vector<LabelId> y{0, 0, 0, 1, 1, 1};
  for (std::size_t i = 0; i < 6; ++i) {
    x(i, 0) = 7.0;                      // constant
    x(i, 1) = static_cast<double>(i);   // separates at 2.5
    x(i, 2) = static_cast<double>(i % 2);
  }
  const FeatureColumns cols(x);
  const std::vector<std::uint32_t> feats{0, 1, 2};
  const std::vector<double> ones{1, 1};
  TreeConfig cfg;
  const auto s = best_split(cols, y, all_rows(6), feats, ones, 2, cfg);
  REQUIRE(s);
  CHECK(s->feature == 1);
  CHECK(s->threshold == 2.5);
  CHECK(s->gain == doctest::Approx(0.5));
  CHECK(s->n_left == 3);

  const std::vector<std::uint32_t> constant{0};
  CHECK_FALSE(best_split(cols, y, all_rows(6), constant, ones, 2, cfg));
  cfg.min_samples_leaf = 4;
  CHECK_FALSE(best_split(cols, y, all_rows(6), feats, ones, 2, cfg));
}

TEST_CASE("best_split equals exhaustive enumeration") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(29), d = 1 + rng.uniform_index(4);
    const std::size_t k = 2 + rng.uniform_index(2);
    if (n < k) continue;
    auto x = test::random_grid_matrix(n, d, 2 + static_cast<int>(rng.uniform_index(6)), rng);
    // Some exact zeros and negatives to exercise the zero block.
    for (auto& v : x.data()) v -= 1.0;
    const auto y = test::random_labels(n, k, rng);
    auto cfg = random_tree_config(rng);
    const auto cw = class_weights(y, k, cfg.class_weight);
    const auto samples = all_rows(n);
    std::vector<std::uint32_t> feats(d);
    for (std::uint32_t f = 0; f < d; ++f) feats[f] = f;
    const auto got = best_split(FeatureColumns(x), y, samples, feats, cw, k, cfg);
    const auto want = oracle_split(x, y, samples, k, cw, cfg);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->feature == want->feature);
      CHECK(got->threshold == want->threshold);
      CHECK(got->gain == doctest::Approx(want->gain).epsilon(1e-12));
    }
  }
}

TEST_CASE("fit_cart equals the recursive oracle") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(27), d = 1 + rng.uniform_index(4), k = 2 + rng.uniform_index(2);
    auto x = test::random_grid_matrix(n, d, 2 + static_cast<int>(rng.uniform_index(5)), rng);
    const auto y = test::random_labels(n, k, rng);
    const auto cfg = random_tree_config(rng);
    const auto cw = class_weights(y, k, cfg.class_weight);
    const auto tree = fit_cart(x, y, k, cfg);
    const auto oracle = oracle_tree(x, y, all_rows(n), k, cw, cfg, 0);
    const auto probes = test::random_grid_matrix(20, d, 6, rng);
    for (std::size_t i = 0; i < n; ++i) CHECK(predict(tree, x.row(i)) == oracle_predict(*oracle, x.row(i)));
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(predict(tree, probes.row(i)) == oracle_predict(*oracle, probes.row(i)));
    }
    for (const auto& node : tree.nodes) {
      double total = 0.0;
      for (double c : node.counts) total += c;
      CHECK(total == static_cast<double>(node.n_samples));
      if (!node.is_leaf()) CHECK(node.gain > 0.0);
    }
    if (cfg.max_depth >= 0) CHECK(tree.depth() <= static_cast<std::size_t>(cfg.max_depth));
  }
}

TEST_CASE("cart stopping rules") {
  DenseMatrix x(5, 1);
  for (std::size_t i = 0; i < 5; ++i) x(i, 0) = static_cast<double>(i);
  const std::vector<LabelId> same(5, 1);
  CHECK(fit_cart(x, same, 2, {}).nodes.size() == 1);

  Rng rng(5);
  const auto big = test::random_grid_matrix(40, 3, 8, rng);
  const auto y = test::random_labels(40, 3, rng);
  TreeConfig stump;
  stump.max_depth = 1;
  CHECK(fit_cart(big, y, 3, stump).nodes.size() <= 3);
}

TEST_CASE("one tree without bootstrap over all features is CART") {
  Rng rng(303);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 6 + rng.uniform_index(40), d = 1 + rng.uniform_index(5), k = 2 + rng.uniform_index(3);
    const auto x = test::random_grid_matrix(n, d, 5, rng);
    const auto y = test::random_labels(n, k, rng);
    auto cfg = random_tree_config(rng);
    cfg.n_estimators = 1;
    cfg.bootstrap = false;
    cfg.max_features = d;
    const FeatureColumns cols(x);
    const auto forest = fit_forest(cols, y, k, cfg, rng.next());
    const auto cart = fit_cart(cols, y, k, cfg);
    const auto probes = test::random_grid_matrix(30, d, 7, rng);
    for (std::size_t i = 0; i < 30; ++i) CHECK(predict(forest, probes.row(i)) == predict(cart, probes.row(i)));
    for (std::size_t i = 0; i < n; ++i) CHECK(predict(forest, x.row(i)) == predict(cart, x.row(i)));
  }
}

TEST_CASE("forest determinism, voting and tree order") {
  Rng rng(404);
  const auto x = test::random_grid_matrix(60, 6, 10, rng);
  const auto y = test::random_labels(60, 3, rng);
  TreeConfig cfg;
  cfg.n_estimators = 15;
  const FeatureColumns cols(x);
  const auto a = fit_forest(cols, y, 3, cfg, 9);
  const auto b = fit_forest(cols, y, 3, cfg, 9);
  CHECK(to_json(a) == to_json(b));
  CHECK(a.features_per_split == 3);  // ceil(sqrt(6))

  auto reversed = a;
  std::reverse(reversed.trees.begin(), reversed.trees.end());
  const auto sx = to_sparse(x);
  for (const auto& row : sx.rows) {
    CHECK(predict(a, row) == predict(reversed, row));
    const auto v = votes(a, row);
    std::size_t total = 0;
    for (auto c : v) total += c;
    CHECK(total == 15);
    std::vector<double> vd(v.begin(), v.end());
    CHECK(predict(a, row) == argmax(vd));
    double psum = 0.0;
    for (double p : predict_proba(a, row)) psum += p;
    CHECK(psum == doctest::Approx(1.0));
  }

  // Unanimity: every tree is a leaf of class 2.
  ForestModel f;
  f.num_classes = 3;
  f.dim = 1;
  DecisionTree leaf;
  leaf.num_classes = 3;
  leaf.dim = 1;
  leaf.class_weights = {1, 1, 1};
  TreeNode node;
  node.counts = {0, 0, 4};
  node.n_samples = 4;
  node.weight = 4;
  leaf.nodes = {node};
  f.trees = {leaf, leaf, leaf};
  SparseVector any{{0}, {1.0}};
  CHECK(predict(f, any) == 2);
}

TEST_CASE("feature importance") {
  DenseMatrix x(40, 3);
  std::vector<LabelId> y(40);
  Rng rng(7);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = i % 2;
    x(i, 0) = static_cast<double>(y[i]);
    x(i, 1) = 0.0;
    x(i, 2) = 0.0;
  }
  TreeConfig cfg;
  cfg.n_estimators = 10;
  cfg.max_features = 3;
  auto imp = feature_importance(fit_forest(FeatureColumns(x), y, 2, cfg, 1));
  CHECK(imp[0] == doctest::Approx(1.0));
  CHECK(imp[1] == 0.0);
  CHECK(imp[2] == 0.0);

  // Two jittered copies of one informative feature share the credit.
  DenseMatrix dup(200, 2);
  std::vector<LabelId> yd(200);
  for (std::size_t i = 0; i < 200; ++i) {
    const double base = rng.uniform(-1, 1);
    yd[i] = base > 0;
    dup(i, 0) = base + rng.uniform(-1e-3, 1e-3);
    dup(i, 1) = base + rng.uniform(-1e-3, 1e-3);
  }
  TreeConfig c2;
  c2.n_estimators = 200;
  c2.max_features = 1;
  imp = feature_importance(fit_forest(FeatureColumns(dup), yd, 2, c2, 3));
  CHECK(std::abs(imp[0] - imp[1]) < 0.15);
  CHECK(imp[0] + imp[1] == doctest::Approx(1.0));
}

TEST_CASE("tree and forest json") {
  Rng rng(8);
  const auto x = test::random_grid_matrix(50, 4, 6, rng);
  const auto y = test::random_labels(50, 3, rng);
  TreeConfig cfg;
  cfg.n_estimators = 5;
  const auto forest = fit_forest(FeatureColumns(x), y, 3, cfg, 2);
  const auto back = forest_from_json(to_json(forest));
  const auto sx = to_sparse(x);
  for (const auto& row : sx.rows) {
    CHECK(predict(back, row) == predict(forest, row));
    CHECK(predict_proba(back, row) == predict_proba(forest, row));
  }
  const auto tree = fit_cart(x, y, 3, cfg);
  CHECK(to_json(tree_from_json(to_json(tree))) == to_json(tree));
  CHECK_THROWS(parse_criterion("mse"));
}
