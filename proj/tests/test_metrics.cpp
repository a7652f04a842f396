#include <cmath>
#include <limits>

#include "doctest.h"
#include "mhc/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mhc;
using test::pairwise_auc;

namespace {

std::vector<double> grid_scores(std::size_t n, Rng& rng) {
  std::vector<double> s(n);
  for (auto& v : s) v = static_cast<double>(rng.uniform_index(6)) / 5.0;
  return s;
}

}  // namespace

TEST_CASE("confusion matrix counts") {
  const std::vector<LabelId> t{0, 0, 1, 2, 2, 2}, p{0, 1, 1, 2, 0, 2};
  const auto cm = confusion_matrix(t, p, 3);
  CHECK(cm(0, 0) == 1);
  CHECK(cm(0, 1) == 1);
  CHECK(cm(1, 1) == 1);
  CHECK(cm(2, 0) == 1);
  CHECK(cm(2, 2) == 2);
  CHECK(cm.total() == 6);
  const std::vector<LabelId> bad{0, 3};
  CHECK_THROWS(confusion_matrix(bad, bad, 3));
  CHECK_THROWS(confusion_matrix(t, bad, 3));
}

TEST_CASE("precision recall and F1 from counts") {
  // Class 1: TP 8, FP 2, FN 4. Class 0: TP 6, FP 4, FN 2.
  ConfusionMatrix cm{2, {6, 2, 4, 8}};
  const auto r = precision_recall_f1(cm);
  CHECK(r.per_class[1].precision == doctest::Approx(0.8));
  CHECK(r.per_class[1].recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[1].f1 == doctest::Approx(16.0 / 22.0));
  CHECK(r.per_class[0].f1 == doctest::Approx(12.0 / 18.0));
  CHECK(r.per_class[1].support == 12);
  CHECK(r.accuracy == doctest::Approx(14.0 / 20.0));
  CHECK(r.macro.f1 == doctest::Approx((16.0 / 22.0 + 12.0 / 18.0) / 2));
  CHECK(r.weighted.f1 == doctest::Approx((12 * 16.0 / 22.0 + 8 * 12.0 / 18.0) / 20));
  CHECK(r.micro.f1 == doctest::Approx(r.accuracy));
}

TEST_CASE("undefined ratios are zero and flagged") {
  // Class 2 never occurs and is never predicted; class 1 is never predicted.
  ConfusionMatrix cm{3, {3, 0, 0, 2, 0, 0, 0, 0, 0}};
  const auto r = precision_recall_f1(cm);
  CHECK(r.per_class[1].precision == 0.0);
  CHECK(r.per_class[1].precision_undefined);
  CHECK_FALSE(r.per_class[1].recall_undefined);
  CHECK(r.per_class[2].precision_undefined);
  CHECK(r.per_class[2].recall_undefined);
  CHECK(r.per_class[2].f1 == 0.0);
  CHECK(r.per_class[0].f1 == doctest::Approx(6.0 / 8.0));
}

TEST_CASE("micro F1 equals accuracy on random labels") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = test::random_labels(40, 4, rng), p = test::random_labels(40, 4, rng);
    const auto r = precision_recall_f1(confusion_matrix(t, p, 4));
    CHECK(r.micro.f1 == doctest::Approx(r.accuracy).epsilon(1e-12));
    CHECK(weighted_f1(t, p, 4) == doctest::Approx(r.weighted.f1));
  }
}

TEST_CASE("AUROC matches the pairwise definition") {
  CHECK(auroc(std::vector<std::uint8_t>{0, 0, 1, 1}, std::vector<double>{0.1, 0.4, 0.35, 0.8}) == 0.75);
  CHECK(auroc(std::vector<std::uint8_t>{0, 1}, std::vector<double>{0.5, 0.5}) == 0.5);
  CHECK_THROWS(auroc(std::vector<std::uint8_t>{1, 1}, std::vector<double>{0.1, 0.2}));
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(40);
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = rng.bernoulli(0.4);
    y[0] = 1;
    y[1] = 0;
    const auto s = grid_scores(n, rng);
    const double want = pairwise_auc(y, s);
    CHECK(auroc(y, s) == doctest::Approx(want).epsilon(1e-12));
    const auto roc = roc_curve(y, s);
    CHECK(roc.auc == doctest::Approx(want).epsilon(1e-12));
    CHECK(roc.fpr.front() == 0.0);
    CHECK(roc.tpr.front() == 0.0);
    CHECK(std::isinf(roc.thresholds.front()));
    CHECK(roc.fpr.back() == 1.0);
    CHECK(roc.tpr.back() == 1.0);
    for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
      CHECK(roc.fpr[i] >= roc.fpr[i - 1]);
      CHECK(roc.tpr[i] >= roc.tpr[i - 1]);
      CHECK(roc.thresholds[i] < roc.thresholds[i - 1]);
    }

    // Strictly increasing transforms and permutations leave the value unchanged.
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
    CHECK(auroc(y, t) == doctest::Approx(want).epsilon(1e-12));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<std::uint8_t> yp(n);
    std::vector<double> sp(n);
    for (std::size_t i = 0; i < n; ++i) {
      yp[i] = y[perm[i]];
      sp[i] = s[perm[i]];
    }
    CHECK(auroc(yp, sp) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("micro one-vs-rest pools every indicator") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto y = test::random_labels(6, 3, rng);
    DenseMatrix s(6, 3);
    for (auto& v : s.data()) v = static_cast<double>(rng.uniform_index(5));
    std::vector<std::uint8_t> flat_y;
    std::vector<double> flat_s;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        flat_y.push_back(y[i] == k);
        flat_s.push_back(s(i, k));
      }
    }
    CHECK(flat_y.size() == 18);
    const auto roc = micro_ovr_roc(y, s);
    CHECK(roc.auc == doctest::Approx(pairwise_auc(flat_y, flat_s)).epsilon(1e-12));

    const auto per = per_class_ovr_auroc(y, s);
    double sum = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<std::uint8_t> yk;
      std::vector<double> sk;
      for (std::size_t i = 0; i < 6; ++i) {
        yk.push_back(y[i] == k);
        sk.push_back(s(i, k));
      }
      CHECK(per[k] == doctest::Approx(pairwise_auc(yk, sk)));
      sum += per[k];
    }
    CHECK(macro_ovr_auroc(y, s) == doctest::Approx(sum / 3));
  }
  // An absent class is NaN and left out of the macro mean.
  const std::vector<LabelId> y{0, 1, 0, 1};
  DenseMatrix s(4, 3);
  s(1, 1) = 1;
  s(3, 1) = 1;
  const auto per = per_class_ovr_auroc(y, s);
  CHECK(std::isnan(per[2]));
  CHECK(macro_ovr_auroc(y, s) == doctest::Approx((per[0] + per[1]) / 2));
}
