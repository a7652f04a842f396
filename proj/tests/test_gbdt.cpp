#include <cmath>
#include <set>

#include "doctest.h"
#include "mhc/gbdt.hpp"
#include "mhc/linear.hpp"
#include "support.hpp"

using namespace mhc;

namespace {

double newton(double g, double h) { return g * g / (h + kLeafLambda); }

// Every (feature, bin boundary) pair scored from raw sample sums.
std::optional<HistSplit> oracle_hist_split(const BinnedMatrix& x, const std::vector<double>& g,
                                           const std::vector<double>& h, std::size_t min_child) {
  std::optional<HistSplit> best;
  double best_gain = 0.0;
  double gp = 0.0, hp = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    gp += g[i];
    hp += h[i];
  }
  for (std::uint32_t f = 0; f < x.cols; ++f) {
    for (std::uint32_t b = 0; b + 1 < x.num_bins(f); ++b) {
      BinStats l, r;
      for (std::size_t i = 0; i < x.rows; ++i) {
        BinStats& s = x.at(i, f) <= b ? l : r;
        s.g += g[i];
        s.h += h[i];
        ++s.count;
      }
      if (l.count < min_child || r.count < min_child) continue;
      const double gain = newton(l.g, l.h) + newton(r.g, r.h) - newton(gp, hp);
      if (gain > best_gain + 1e-12) {
        best = HistSplit{f, b, gain, l, r};
        best_gain = gain;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("bin edges") {
  auto e = bin_edges({3.0, 1.0, 2.0, 2.0}, 255);
  CHECK(e == std::vector<double>{1.5, 2.5});
  CHECK(bin_of(e, 1.0) == 0);
  CHECK(bin_of(e, 1.5) == 0);
  CHECK(bin_of(e, 2.0) == 1);
  CHECK(bin_of(e, 9.0) == 2);
  CHECK(bin_edges({4.0, 4.0}, 255).empty());

  Rng rng(1);
  std::vector<double> many(5000);
  for (auto& v : many) v = rng.uniform(-3, 3);
  e = bin_edges(many, 16);
  CHECK(e.size() <= 15);
  CHECK(e.size() >= 12);
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i - 1] < e[i]);
  // Quantile bins hold roughly equal counts.
  std::vector<std::size_t> counts(e.size() + 1, 0);
  for (double v : many) ++counts[bin_of(e, v)];
  for (auto c : counts) CHECK(c < 2 * 5000 / 16);
}

TEST_CASE("histogram split equals exhaustive binned enumeration") {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(61), d = 1 + rng.uniform_index(4);
    const auto dense = test::random_grid_matrix(n, d, 3 + static_cast<int>(rng.uniform_index(20)), rng);
    const auto binned = bin_features(FeatureColumns(dense), 8);
    for (std::size_t f = 0; f < d; ++f) CHECK(binned.num_bins(f) <= 8);
    std::vector<double> g(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = rng.uniform(-1, 1);
      h[i] = rng.uniform(0.01, 0.25);
    }
    std::vector<std::uint32_t> all(n);
    for (std::uint32_t i = 0; i < n; ++i) all[i] = i;
    const std::size_t min_child = 1 + rng.uniform_index(4);
    const auto got = best_histogram_split(build_histogram(binned, g, h, all), kLeafLambda, min_child);
    const auto want = oracle_hist_split(binned, g, h, min_child);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->feature == want->feature);
      CHECK(got->bin == want->bin);
      CHECK(got->gain == doctest::Approx(want->gain));
      CHECK(got->left.count == want->left.count);
    }
  }
}

TEST_CASE("constant target proportion: base score is the logit, first tree is ~0") {
  DenseMatrix x(40, 2, 1.0);
  std::vector<LabelId> y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = i < 10;
  TreeConfig cfg;
  cfg.n_estimators = 1;
  cfg.min_child_samples = 1;
  const auto m = fit_gbdt(FeatureColumns(x), y, 2, cfg);
  CHECK(m.base_score[0] == doctest::Approx(std::log(0.25 / 0.75)));
  for (const auto& node : m.rounds[0][0].nodes) CHECK(std::abs(node.value) < 1e-12);
}

TEST_CASE("leaf cap, child size and depth limits") {
  Rng rng(77);
  const auto x = test::random_grid_matrix(200, 5, 30, rng);
  const auto y = test::random_labels(200, 3, rng);
  TreeConfig cfg;
  cfg.n_estimators = 5;
  cfg.num_leaves = 2;
  auto m = fit_gbdt(FeatureColumns(x), y, 3, cfg);
  REQUIRE(m.rounds.size() == 5);
  for (const auto& round : m.rounds) {
    CHECK(round.size() == 3);
    for (const auto& t : round) CHECK(t.leaf_count() <= 2);
  }

  cfg.num_leaves = 9;
  cfg.min_child_samples = 15;
  cfg.max_depth = 2;
  m = fit_gbdt(FeatureColumns(x), y, 3, cfg);
  for (const auto& round : m.rounds) {
    for (const auto& t : round) {
      CHECK(t.leaf_count() <= 4);
      CHECK(t.depth() <= 2);
      for (const auto& node : t.nodes) {
        if (node.is_leaf()) CHECK(node.count >= 15);
      }
    }
  }
}

TEST_CASE("separable data: loss falls monotonically and prediction matches training routing") {
  Rng rng(12);
  DenseMatrix x(120, 2);
  std::vector<LabelId> y(120);
  for (std::size_t i = 0; i < 120; ++i) {
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = rng.uniform(-1, 1);
    y[i] = x(i, 0) + 0.5 * x(i, 1) > 0;
  }
  TreeConfig cfg;
  cfg.n_estimators = 50;
  cfg.learning_rate = 0.1;
  cfg.min_child_samples = 5;
  GbdtTrace trace;
  const auto m = fit_gbdt(FeatureColumns(x), y, 2, cfg, &trace);
  REQUIRE(trace.loss.size() == 51);
  for (std::size_t r = 1; r < trace.loss.size(); ++r) CHECK(trace.loss[r] <= trace.loss[r - 1] + 1e-12);
  CHECK(trace.loss.back() < trace.loss.front());

  // Thresholds on raw values route exactly like the training bins.
  std::vector<double> f(120);
  for (std::size_t i = 0; i < 120; ++i) f[i] = raw_scores(m, x.row(i))[0];
  CHECK(gbdt_loss(f, y, 2, m.class_weights) == doctest::Approx(trace.loss.back()).epsilon(1e-12));
  const auto sx = to_sparse(x);
  for (std::size_t i = 0; i < 120; ++i) {
    CHECK(raw_scores(m, sx.rows[i])[0] == doctest::Approx(f[i]));
    const auto p = predict_proba(m, sx.rows[i]);
    CHECK(p[1] == doctest::Approx(sigmoid(f[i])));
  }
}

TEST_CASE("multiclass softmax boosting") {
  Rng rng(19);
  const auto x = test::random_grid_matrix(150, 4, 20, rng);
  std::vector<LabelId> y(150);
  for (std::size_t i = 0; i < 150; ++i) y[i] = x(i, 0) < 7 ? 0 : (x(i, 0) < 14 ? 1 : 2);
  TreeConfig cfg;
  cfg.n_estimators = 20;
  cfg.class_weight = ClassWeightMode::balanced;
  GbdtTrace trace;
  const auto m = fit_gbdt(FeatureColumns(x), y, 3, cfg, &trace);
  CHECK(m.base_score.size() == 3);
  for (std::size_t r = 1; r < trace.loss.size(); ++r) CHECK(trace.loss[r] <= trace.loss[r - 1] + 1e-12);
  const auto sx = to_sparse(x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 150; ++i) {
    const auto p = predict_proba(m, sx.rows[i]);
    double s = 0.0;
    for (double q : p) s += q;
    CHECK(s == doctest::Approx(1.0));
    correct += predict(m, sx.rows[i]) == y[i];
  }
  CHECK(correct == 150);

  const auto back = gbdt_from_json(to_json(m));
  for (const auto& row : sx.rows) CHECK(raw_scores(back, row) == raw_scores(m, row));
}

TEST_CASE("gbdt input errors") {
  DenseMatrix x(4, 1, 1.0);
  std::vector<LabelId> one{0, 0, 0, 0};
  CHECK_THROWS_AS(fit_gbdt(FeatureColumns(x), one, 2, {}), DataError);
  TreeConfig bad;
  bad.learning_rate = 0.0;
  std::vector<LabelId> two{0, 1, 0, 1};
  CHECK_THROWS(fit_gbdt(FeatureColumns(x), two, 2, bad));
}
