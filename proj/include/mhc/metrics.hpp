#pragma once

#include <span>
#include <vector>

#include "mhc/common.hpp"

namespace mhc {

/// K x K counts; rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;

  std::size_t operator()(std::size_t t, std::size_t p) const { return counts[t * num_classes + p]; }
  std::size_t total() const;
};

ConfusionMatrix confusion_matrix(std::span<const LabelId> y_true, std::span<const LabelId> y_pred,
                                 std::size_t num_classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool precision_undefined = false;  // no predictions of this class
  bool recall_undefined = false;     // no true samples of this class
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfReport {
  std::vector<ClassScores> per_class;
  Averages macro;
  Averages micro;
  Averages weighted;
  double accuracy = 0.0;
};

/// One-vs-rest counts per class. 0/0 precision or recall is reported as 0 and
/// flagged; F1 = 2 TP / (2 TP + FP + FN), 0 when that is 0/0.
PrfReport precision_recall_f1(const ConfusionMatrix& cm);

double weighted_f1(std::span<const LabelId> y_true, std::span<const LabelId> y_pred, std::size_t num_classes);

/// Mann-Whitney statistic with midranks: P(s+ > s-) + P(s+ = s-) / 2.
/// Throws std::invalid_argument unless both classes are present.
double auroc(std::span<const std::uint8_t> y_true, std::span<const double> scores);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;  // first entry is +inf for the (0, 0) point
  double auc = 0.0;
};

/// One point per distinct score, descending, starting at (0, 0).
RocCurve roc_curve(std::span<const std::uint8_t> y_true, std::span<const double> scores);

/// Pools the n * K one-vs-rest (indicator, score) pairs into one binary ROC.
/// `scores` is n x K.
RocCurve micro_ovr_roc(std::span<const LabelId> y_true, const DenseMatrix& scores);

/// One-vs-rest AUROC per class; NaN where a class is absent or is every sample.
std::vector<double> per_class_ovr_auroc(std::span<const LabelId> y_true, const DenseMatrix& scores);
/// Mean of the defined per-class values.
double macro_ovr_auroc(std::span<const LabelId> y_true, const DenseMatrix& scores);

}  // namespace mhc
