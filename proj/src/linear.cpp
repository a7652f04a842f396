#include "mhc/linear.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace mhc {
namespace {

constexpr std::size_t kChunks = 64;

void check_shapes(const LinearModel& model, const SparseMatrix& x, std::span<const LabelId> y,
                  std::span<const double> class_weights) {
  if (x.rows.size() != y.size()) throw std::invalid_argument("loss_and_gradient: X and y differ in length");
  if (x.cols != model.dim()) throw std::invalid_argument("loss_and_gradient: feature dimension mismatch");
  if (class_weights.size() != model.num_classes) {
    throw std::invalid_argument("loss_and_gradient: class weight count mismatch");
  }
  for (LabelId label : y) {
    if (label >= model.num_classes) throw std::invalid_argument("loss_and_gradient: label out of range");
  }
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

// Adds one sample's weighted loss to `loss` and, when `grad` is set, its
// gradient. `scratch` receives the logits.
void accumulate_sample(const LinearModel& model, const SparseVector& xi, LabelId yi, double wi,
                       std::vector<double>& scratch, double& loss, DenseMatrix* grad,
                       std::vector<double>* bias_grad) {
  const std::size_t rows = model.coef.rows();
  for (std::size_t k = 0; k < rows; ++k) scratch[k] = xi.dot(model.coef.row(k)) + model.bias[k];

  if (model.is_binary()) {
    const double z = scratch[0];
    const double target = yi == 1 ? 1.0 : 0.0;
    loss += wi * (softplus(z) - target * z);
    if (grad) {
      const double dz = wi * (sigmoid(z) - target);
      auto g = grad->row(0);
      for (std::size_t t = 0; t < xi.indices.size(); ++t) g[xi.indices[t]] += dz * xi.values[t];
      (*bias_grad)[0] += dz;
    }
    return;
  }

  const double lse = log_sum_exp(std::span<const double>(scratch.data(), rows));
  loss += wi * (lse - scratch[yi]);
  if (grad) {
    for (std::size_t k = 0; k < rows; ++k) {
      const double dz = wi * (std::exp(scratch[k] - lse) - (k == yi ? 1.0 : 0.0));
      auto g = grad->row(k);
      for (std::size_t t = 0; t < xi.indices.size(); ++t) g[xi.indices[t]] += dz * xi.values[t];
      (*bias_grad)[k] += dz;
    }
  }
}

void finish(const LinearModel& model, double lambda, std::size_t n, LossGradient& out) {
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  out.loss *= inv_n;
  double penalty = 0.0;
  auto& g = out.coef_grad.data();
  const auto& w = model.coef.data();
  for (std::size_t k = 0; k < w.size(); ++k) {
    penalty += w[k] * w[k];
    g[k] = g[k] * inv_n + 2.0 * lambda * w[k];
  }
  for (double& b : out.bias_grad) b *= inv_n;
  out.loss += lambda * penalty;
}

double squared_norm(const LossGradient& g) {
  double s = 0.0;
  for (double v : g.coef_grad.data()) s += v * v;
  for (double v : g.bias_grad) s += v * v;
  return s;
}

}  // namespace

LinearModel LinearModel::zeros(std::size_t num_classes, std::size_t dim) {
  if (num_classes < 2) throw std::invalid_argument("logistic model needs at least two classes");
  const std::size_t rows = num_classes == 2 ? 1 : num_classes;
  return LinearModel{num_classes, DenseMatrix(rows, dim), std::vector<double>(rows, 0.0)};
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) s += (p[k] = std::exp(z[k] - m));
  for (double& v : p) v /= s;
  return p;
}

LossGradient loss_and_gradient_serial(const LinearModel& model, const SparseMatrix& x,
                                      std::span<const LabelId> y, double lambda,
                                      std::span<const double> class_weights) {
  check_shapes(model, x, y, class_weights);
  LossGradient out{0.0, DenseMatrix(model.coef.rows(), model.dim()), std::vector<double>(model.coef.rows())};
  std::vector<double> scratch(model.coef.rows());
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    accumulate_sample(model, x.rows[i], y[i], class_weights[y[i]], scratch, out.loss, &out.coef_grad,
                      &out.bias_grad);
  }
  finish(model, lambda, x.rows.size(), out);
  return out;
}

LossGradient loss_and_gradient(const LinearModel& model, const SparseMatrix& x, std::span<const LabelId> y,
                               double lambda, std::span<const double> class_weights) {
  check_shapes(model, x, y, class_weights);
  const std::size_t n = x.rows.size();
  const std::size_t rows = model.coef.rows();
  const std::size_t chunks = std::max<std::size_t>(1, std::min(kChunks, n));
  std::vector<LossGradient> partial(chunks);

#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    LossGradient& p = partial[c];
    p.coef_grad = DenseMatrix(rows, model.dim());
    p.bias_grad.assign(rows, 0.0);
    std::vector<double> scratch(rows);
    const std::size_t begin = n * c / chunks;
    const std::size_t end = n * (c + 1) / chunks;
    for (std::size_t i = begin; i < end; ++i) {
      accumulate_sample(model, x.rows[i], y[i], class_weights[y[i]], scratch, p.loss, &p.coef_grad,
                        &p.bias_grad);
    }
  }

  LossGradient out{0.0, DenseMatrix(rows, model.dim()), std::vector<double>(rows, 0.0)};
  for (const auto& p : partial) {
    out.loss += p.loss;
    auto& g = out.coef_grad.data();
    const auto& pg = p.coef_grad.data();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += pg[k];
    for (std::size_t k = 0; k < rows; ++k) out.bias_grad[k] += p.bias_grad[k];
  }
  finish(model, lambda, n, out);
  return out;
}

double objective(const LinearModel& model, const SparseMatrix& x, std::span<const LabelId> y, double lambda,
                 std::span<const double> class_weights) {
  check_shapes(model, x, y, class_weights);
  const std::size_t n = x.rows.size();
  const std::size_t chunks = std::max<std::size_t>(1, std::min(kChunks, n));
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    std::vector<double> scratch(model.coef.rows());
    for (std::size_t i = n * c / chunks; i < n * (c + 1) / chunks; ++i) {
      accumulate_sample(model, x.rows[i], y[i], class_weights[y[i]], scratch, partial[c], nullptr, nullptr);
    }
  }
  double loss = 0.0;
  for (double p : partial) loss += p;
  loss /= static_cast<double>(std::max<std::size_t>(n, 1));
  double penalty = 0.0;
  for (double w : model.coef.data()) penalty += w * w;
  return loss + lambda * penalty;
}

double regularization_strength(double C, std::size_t n) {
  if (!(C > 0)) throw UsageError("logistic C must be positive");
  return 1.0 / (2.0 * C * static_cast<double>(std::max<std::size_t>(n, 1)));
}

LinearModel fit_logistic_lambda(const SparseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                                double lambda, std::span<const double> class_weights, int max_iter,
                                double tol, FitTrace* trace) {
  if (max_iter < 1) throw UsageError("max_iter must be at least 1");
  require_finite(x);
  const auto counts = class_counts(y, num_classes);
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw DataError("fit_logistic: at least two classes must be present");
  }

  LinearModel model = LinearModel::zeros(num_classes, x.cols);
  LossGradient current = loss_and_gradient(model, x, y, lambda, class_weights);
  FitTrace local;
  local.objective.push_back(current.loss);

  // Parameters and gradients as flat vectors: coefficients, then biases.
  const std::size_t nw = model.coef.data().size();
  auto flatten = [nw](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> v(nw + b.size());
    std::copy(a.begin(), a.end(), v.begin());
    std::copy(b.begin(), b.end(), v.begin() + static_cast<std::ptrdiff_t>(nw));
    return v;
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  constexpr std::size_t kMemory = 10;
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  int it = 0;
  for (; it < max_iter; ++it) {
    const auto g = flatten(current.coef_grad.data(), current.bias_grad);
    local.grad_norm = std::sqrt(dot(g, g));
    if (local.grad_norm < tol) {
      local.converged = true;
      break;
    }
    // Two-loop recursion for the L-BFGS direction.
    std::vector<double> q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t j = s_hist.size(); j-- > 0;) {
      alpha[j] = rho_hist[j] * dot(s_hist[j], q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[j] * y_hist[j][i];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : q) v *= gamma;
    }
    for (std::size_t j = 0; j < s_hist.size(); ++j) {
      const double beta = rho_hist[j] * dot(y_hist[j], q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[j] - beta) * s_hist[j][i];
    }
    double slope = -dot(g, q);
    if (!(slope < 0)) {
      // Curvature pairs went bad; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      q = g;
      slope = -dot(g, g);
    }
    const auto x0 = flatten(model.coef.data(), model.bias);
    double step = s_hist.empty() ? std::min(1.0, 1.0 / local.grad_norm) : 1.0;
    LinearModel candidate = model;
    bool accepted = false;
    while (step > 1e-16) {
      auto& cw = candidate.coef.data();
      for (std::size_t k = 0; k < nw; ++k) cw[k] = x0[k] - step * q[k];
      for (std::size_t k = 0; k < candidate.bias.size(); ++k) candidate.bias[k] = x0[nw + k] - step * q[nw + k];
      const double f = objective(candidate, x, y, lambda, class_weights);
      if (f <= current.loss + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    LossGradient next = loss_and_gradient(candidate, x, y, lambda, class_weights);
    auto sk = flatten(candidate.coef.data(), candidate.bias);
    auto yk = flatten(next.coef_grad.data(), next.bias_grad);
    for (std::size_t i = 0; i < sk.size(); ++i) {
      sk[i] -= x0[i];
      yk[i] -= g[i];
    }
    const double sy = dot(sk, yk);
    if (sy > 1e-12 * std::sqrt(dot(sk, sk) * dot(yk, yk))) {
      if (s_hist.size() == kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(sk));
      y_hist.push_back(std::move(yk));
      rho_hist.push_back(1.0 / sy);
    }
    model = std::move(candidate);
    current = std::move(next);
    local.objective.push_back(current.loss);
  }
  local.iterations = it;
  local.grad_norm = std::sqrt(squared_norm(current));
  if (local.grad_norm < tol) local.converged = true;
  if (trace) *trace = std::move(local);
  return model;
}

LinearModel fit_logistic(const SparseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                         const LogisticConfig& config, FitTrace* trace) {
  const auto weights = class_weights(y, num_classes, config.class_weight);
  const double lambda = regularization_strength(config.C, x.rows.size());
  return fit_logistic_lambda(x, y, num_classes, lambda, weights, config.max_iter, config.tol, trace);
}

std::vector<double> logits(const LinearModel& model, const SparseVector& x) {
  if (!x.indices.empty() && x.indices.back() >= model.dim()) {
    throw std::invalid_argument("predict: feature index beyond model dimension");
  }
  std::vector<double> z(model.coef.rows());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = x.dot(model.coef.row(k)) + model.bias[k];
  return z;
}

std::vector<double> predict_proba(const LinearModel& model, const SparseVector& x) {
  const auto z = logits(model, x);
  if (model.is_binary()) {
    const double p = sigmoid(z[0]);
    return {1.0 - p, p};
  }
  return softmax(z);
}

LabelId predict(const LinearModel& model, const SparseVector& x) {
  return static_cast<LabelId>(argmax(predict_proba(model, x)));
}

nlohmann::json to_json(const LinearModel& model) {
  return {{"num_classes", model.num_classes},
          {"scheme", model.is_binary() ? "binary" : "multinomial"},
          {"rows", model.coef.rows()},
          {"dim", model.dim()},
          {"coef", model.coef.data()},
          {"bias", model.bias}};
}

LinearModel linear_from_json(const nlohmann::json& j) {
  const auto k = j.at("num_classes").get<std::size_t>();
  const auto rows = j.at("rows").get<std::size_t>();
  const auto dim = j.at("dim").get<std::size_t>();
  LinearModel m = LinearModel::zeros(k, dim);
  const auto coef = j.at("coef").get<std::vector<double>>();
  if (rows != m.coef.rows() || coef.size() != rows * dim) throw DataError("linear json: shape mismatch");
  m.coef.data() = coef;
  m.bias = j.at("bias").get<std::vector<double>>();
  if (m.bias.size() != rows) throw DataError("linear json: bias length mismatch");
  return m;
}

}  // namespace mhc
