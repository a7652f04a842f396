#include "mhc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mhc {
namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts check_binary(std::span<const std::uint8_t> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw std::invalid_argument("roc: labels and scores differ in length");
  Counts c;
  for (auto y : y_true) (y ? c.pos : c.neg)++;
  if (c.pos == 0 || c.neg == 0) throw std::invalid_argument("roc: both classes must be present");
  for (double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument("roc: NaN score");
  }
  return c;
}

std::vector<std::size_t> order_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

ConfusionMatrix confusion_matrix(std::span<const LabelId> y_true, std::span<const LabelId> y_pred,
                                 std::size_t num_classes) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion_matrix: length mismatch");
  ConfusionMatrix cm{num_classes, std::vector<std::size_t>(num_classes * num_classes, 0)};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= num_classes || y_pred[i] >= num_classes) {
      throw std::invalid_argument("confusion_matrix: label out of range");
    }
    ++cm.counts[y_true[i] * num_classes + y_pred[i]];
  }
  return cm;
}

PrfReport precision_recall_f1(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes;
  PrfReport r;
  r.per_class.resize(k);
  std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0, total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = cm(c, c), fp = 0, fn = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += cm(o, c);
      fn += cm(c, o);
    }
    ClassScores& s = r.per_class[c];
    s.support = tp + fn;
    s.precision_undefined = tp + fp == 0;
    s.recall_undefined = tp + fn == 0;
    s.precision = s.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    s.recall = s.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const std::size_t denom = 2 * tp + fp + fn;
    s.f1 = denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    total += s.support;
  }
  for (const auto& s : r.per_class) {
    r.macro.precision += s.precision;
    r.macro.recall += s.recall;
    r.macro.f1 += s.f1;
    if (total > 0) {
      const double w = static_cast<double>(s.support) / static_cast<double>(total);
      r.weighted.precision += w * s.precision;
      r.weighted.recall += w * s.recall;
      r.weighted.f1 += w * s.f1;
    }
  }
  if (k > 0) {
    r.macro.precision /= static_cast<double>(k);
    r.macro.recall /= static_cast<double>(k);
    r.macro.f1 /= static_cast<double>(k);
  }
  if (tp_sum + fp_sum > 0) r.micro.precision = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fp_sum);
  if (tp_sum + fn_sum > 0) r.micro.recall = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fn_sum);
  const std::size_t micro_denom = 2 * tp_sum + fp_sum + fn_sum;
  if (micro_denom > 0) r.micro.f1 = static_cast<double>(2 * tp_sum) / static_cast<double>(micro_denom);
  if (total > 0) r.accuracy = static_cast<double>(tp_sum) / static_cast<double>(total);
  return r;
}

double weighted_f1(std::span<const LabelId> y_true, std::span<const LabelId> y_pred, std::size_t num_classes) {
  return precision_recall_f1(confusion_matrix(y_true, y_pred, num_classes)).weighted.f1;
}

double auroc(std::span<const std::uint8_t> y_true, std::span<const double> scores) {
  const Counts c = check_binary(y_true, scores);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the positive midrank sum keeps every quantity an integer.
  std::size_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::size_t twice_midrank = (i + 1) + j;  // ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (y_true[order[t]]) twice_rank_sum += twice_midrank;
    }
    i = j;
  }
  const double u2 = static_cast<double>(twice_rank_sum - c.pos * (c.pos + 1));
  return u2 / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

RocCurve roc_curve(std::span<const std::uint8_t> y_true, std::span<const double> scores) {
  const Counts c = check_binary(y_true, scores);
  const auto order = order_descending(scores);
  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  // Twice the area times pos * neg, accumulated in integers.
  std::size_t twice_area = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    while (i < order.size() && scores[order[i]] == s) {
      (y_true[order[i]] ? tp : fp)++;
      ++i;
    }
    twice_area += (fp - fp0) * (tp + tp0);
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(c.neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(c.pos));
    roc.thresholds.push_back(s);
  }
  roc.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
  return roc;
}

RocCurve micro_ovr_roc(std::span<const LabelId> y_true, const DenseMatrix& scores) {
  if (scores.rows() != y_true.size()) throw std::invalid_argument("micro_ovr_roc: rows do not match labels");
  const std::size_t k = scores.cols();
  if (k < 2 || y_true.empty()) throw std::invalid_argument("micro_ovr_roc: need K >= 2 and at least one sample");
  std::vector<std::uint8_t> flat_y;
  std::vector<double> flat_s;
  flat_y.reserve(y_true.size() * k);
  flat_s.reserve(y_true.size() * k);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= k) throw std::invalid_argument("micro_ovr_roc: label out of range");
    for (std::size_t c = 0; c < k; ++c) {
      flat_y.push_back(y_true[i] == c ? 1 : 0);
      flat_s.push_back(scores(i, c));
    }
  }
  return roc_curve(flat_y, flat_s);
}

std::vector<double> per_class_ovr_auroc(std::span<const LabelId> y_true, const DenseMatrix& scores) {
  if (scores.rows() != y_true.size()) throw std::invalid_argument("per_class_ovr_auroc: rows do not match labels");
  const std::size_t k = scores.cols();
  std::vector<double> out(k, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> yb(y_true.size());
  std::vector<double> s(y_true.size());
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      yb[i] = y_true[i] == c ? 1 : 0;
      pos += yb[i];
      s[i] = scores(i, c);
    }
    if (pos > 0 && pos < y_true.size()) out[c] = auroc(yb, s);
  }
  return out;
}

double macro_ovr_auroc(std::span<const LabelId> y_true, const DenseMatrix& scores) {
  const auto per = per_class_ovr_auroc(y_true, scores);
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : per) {
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace mhc
