#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "mhc/common.hpp"

namespace mhc {

/// Logistic regression parameters. Binary problems keep a single coefficient
/// row (sigmoid); K > 2 keeps K rows (softmax).
struct LinearModel {
  std::size_t num_classes = 2;
  DenseMatrix coef;
  std::vector<double> bias;

  static LinearModel zeros(std::size_t num_classes, std::size_t dim);
  bool is_binary() const { return num_classes == 2; }
  std::size_t dim() const { return coef.cols(); }
};

struct LogisticConfig {
  double C = 1.0;
  ClassWeightMode class_weight = ClassWeightMode::none;
  int max_iter = 1000;
  double tol = 1e-6;
};

struct LossGradient {
  double loss = 0.0;
  DenseMatrix coef_grad;
  std::vector<double> bias_grad;
};

/// Weighted mean cross-entropy plus lambda * ||W||^2 (bias unpenalized) and its
/// exact gradient. Samples are reduced in fixed chunks under OpenMP, so the
/// result does not depend on the thread count.
LossGradient loss_and_gradient(const LinearModel& model, const SparseMatrix& x, std::span<const LabelId> y,
                               double lambda, std::span<const double> class_weights);
LossGradient loss_and_gradient_serial(const LinearModel& model, const SparseMatrix& x,
                                      std::span<const LabelId> y, double lambda,
                                      std::span<const double> class_weights);
double objective(const LinearModel& model, const SparseMatrix& x, std::span<const LabelId> y, double lambda,
                 std::span<const double> class_weights);

/// Penalty weight used by fit_logistic: 1 / (2 C n), i.e. C * sum(CE) + ||W||^2 / 2
/// rescaled to a mean loss.
double regularization_strength(double C, std::size_t n);

struct FitTrace {
  std::vector<double> objective;  // one entry per accepted iterate, starting at W = 0
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Full-batch L-BFGS (memory 10) with Armijo backtracking from W = 0, b = 0.
/// Stops when the gradient norm drops below tol or after max_iter steps.
LinearModel fit_logistic(const SparseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                         const LogisticConfig& config, FitTrace* trace = nullptr);

/// Same as fit_logistic with an explicit penalty weight.
LinearModel fit_logistic_lambda(const SparseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                                double lambda, std::span<const double> class_weights, int max_iter,
                                double tol, FitTrace* trace = nullptr);

std::vector<double> logits(const LinearModel& model, const SparseVector& x);
/// Sigmoid or max-shifted softmax; sums to 1.
std::vector<double> predict_proba(const LinearModel& model, const SparseVector& x);
LabelId predict(const LinearModel& model, const SparseVector& x);

std::vector<double> softmax(std::span<const double> z);
double sigmoid(double z);

nlohmann::json to_json(const LinearModel& model);
LinearModel linear_from_json(const nlohmann::json& j);

}  // namespace mhc
