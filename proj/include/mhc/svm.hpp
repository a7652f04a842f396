#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mhc/common.hpp"

namespace mhc {

enum class KernelKind { linear, polynomial, rbf, sigmoid };

KernelKind parse_kernel_kind(std::string_view s);
std::string_view to_string(KernelKind kind);

enum class GammaMode { scale, auto_, value };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  GammaMode gamma_mode = GammaMode::scale;
  double gamma = 0.0;  // resolved value; 0 means unresolved
  int degree = 3;
  double coef0 = 0.0;
  double alpha = 1.0;  // sigmoid slope

  bool resolved() const { return kind != KernelKind::rbf || gamma > 0.0; }
};

/// Fixes gamma: `scale` = 1 / (D * var(X)), `auto` = 1 / D, explicit values kept.
/// var(X) is taken over every entry of the training matrix, zeros included.
KernelSpec resolve_kernel(KernelSpec spec, const SparseMatrix& x_train);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z);
double kernel_eval(const KernelSpec& spec, const SparseVector& x, const SparseVector& z);

/// n x n kernel matrix; OpenMP over rows.
DenseMatrix gram_matrix(const KernelSpec& spec, const SparseMatrix& x);
DenseMatrix gram_matrix_serial(const KernelSpec& spec, const SparseMatrix& x);

/// One binary machine of a one-vs-one ensemble. f(x) >= 0 predicts
/// `positive_class`; `negative_class` < `positive_class`.
struct BinarySvm {
  LabelId negative_class = 0;
  LabelId positive_class = 1;
  // Linear primal: w over the input features, b the weight of the constant feature.
  std::vector<double> weights;
  // Dual: support vectors with coefficients alpha_i * y_i.
  SparseMatrix support;
  std::vector<double> dual_coef;
  std::vector<double> alpha_bound;  // C * class weight of each support vector
  double bias = 0.0;
};

struct SvmModel {
  KernelSpec kernel;
  double C = 1.0;
  std::size_t num_classes = 2;
  std::size_t dim = 0;
  std::vector<double> class_weights;
  std::vector<BinarySvm> machines;
};

struct SvmConfig {
  double C = 1.0;
  KernelSpec kernel;
  ClassWeightMode class_weight = ClassWeightMode::none;
  int epochs = 0;  // 0 picks the solver default
  std::uint64_t seed = 0;
};

struct SvmTrace {
  // Per machine, per epoch: primal objective of the raw iterate and of the
  // retained best iterate (linear); dual objective (nonlinear).
  std::vector<std::vector<double>> raw_objective;
  std::vector<std::vector<double>> objective;
};

/// Linear kernel: primal subgradient descent on 1/2 ||w||^2 + C sum weight_i hinge_i,
/// step 1 / (lambda t) with lambda = 1 / (C n). Other kernels: dual coordinate
/// ascent with 0 <= alpha_i <= C weight(y_i). K > 2 trains K (K - 1) / 2 machines.
SvmModel fit_svm(const SparseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                 const SvmConfig& config, SvmTrace* trace = nullptr);

double decision_value(const SvmModel& model, const BinarySvm& machine, const SparseVector& x);
/// One margin per machine, in machine order.
std::vector<double> decision_function(const SvmModel& model, const SparseVector& x);
/// Majority vote over machines; ties to the lowest class id.
LabelId predict(const SvmModel& model, const SparseVector& x);
/// Binary: (-f, f). Multiclass: votes plus a confidence term bounded by 1/3,
/// used for ranking in ROC analysis.
std::vector<double> class_scores(const SvmModel& model, const SparseVector& x);

/// Hinge objective 1/2 ||w||^2 + C sum_i weight_i max(0, 1 - y_i (w.x_i + b))
/// with y_i in {-1, +1}; `w` has D + 1 entries, the last one being b.
double hinge_objective(std::span<const double> w, const DenseMatrix& x, std::span<const int> y, double C,
                       std::span<const double> sample_weights);
std::vector<double> hinge_subgradient(std::span<const double> w, const DenseMatrix& x, std::span<const int> y,
                                      double C, std::span<const double> sample_weights);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& j);

}  // namespace mhc
