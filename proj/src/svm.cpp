#include "mhc/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mhc {
namespace {

constexpr int kLinearEpochs = 20;
constexpr int kDualEpochs = 100;
constexpr double kDualTolerance = 1e-3;
constexpr std::size_t kGramCacheLimit = 5000;

double apply_kernel(const KernelSpec& spec, double dot, double x_norm2, double z_norm2) {
  switch (spec.kind) {
    case KernelKind::linear:
      return dot;
    case KernelKind::polynomial:
      return std::pow(dot + spec.coef0, spec.degree);
    case KernelKind::rbf:
      return std::exp(-spec.gamma * std::max(0.0, x_norm2 + z_norm2 - 2.0 * dot));
    case KernelKind::sigmoid:
      return std::tanh(spec.alpha * dot + spec.coef0);
  }
  return 0.0;
}

void check_spec(const KernelSpec& spec) {
  if (!spec.resolved()) throw std::invalid_argument("kernel gamma is unresolved");
  if (spec.kind == KernelKind::polynomial && spec.degree < 1) {
    throw std::invalid_argument("polynomial degree must be at least 1");
  }
}

std::vector<double> row_norms(const SparseMatrix& x) {
  std::vector<double> norms(x.rows.size());
  for (std::size_t i = 0; i < x.rows.size(); ++i) norms[i] = x.rows[i].squared_norm();
  return norms;
}

// Kernel rows for one binary sub-problem, precomputed when small enough.
class KernelRows {
 public:
  KernelRows(const KernelSpec& spec, const SparseMatrix& x) : spec_(spec), x_(x), norms_(row_norms(x)) {
    if (x.rows.size() <= kGramCacheLimit) gram_ = gram_matrix(spec, x);
  }

  double diag(std::size_t i) const {
    return apply_kernel(spec_, norms_[i], norms_[i], norms_[i]);
  }

  std::span<const double> row(std::size_t i) {
    if (gram_.rows() > 0) return gram_.row(i);
    scratch_.resize(x_.rows.size());
    const std::size_t n = x_.rows.size();
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < n; ++j) {
      scratch_[j] = apply_kernel(spec_, x_.rows[i].dot(x_.rows[j]), norms_[i], norms_[j]);
    }
    return scratch_;
  }

 private:
  const KernelSpec& spec_;
  const SparseMatrix& x_;
  std::vector<double> norms_;
  DenseMatrix gram_;
  std::vector<double> scratch_;
};

struct SubProblem {
  SparseMatrix x;
  std::vector<int> sign;          // +1 positive class, -1 negative class
  std::vector<double> bound;      // C * class weight
  std::vector<double> weight;     // class weight
};

void fit_linear_primal(const SubProblem& p, double C, int epochs, std::uint64_t seed, BinarySvm& machine,
                       std::vector<double>* raw_trace, std::vector<double>* trace) {
  const std::size_t n = p.x.rows.size();
  const std::size_t d = p.x.cols;
  const double lambda = 1.0 / (C * static_cast<double>(n));
  const double mean_weight = std::accumulate(p.weight.begin(), p.weight.end(), 0.0) / static_cast<double>(n);
  const double radius = std::sqrt(2.0 * mean_weight / lambda);

  // w = scale * v; the last entry of v multiplies the constant feature.
  std::vector<double> v(d + 1, 0.0);
  double scale = 1.0;
  double v_norm2 = 0.0;
  std::vector<double> best(d + 1, 0.0);
  double best_objective = 0.0;
  bool have_best = false;

  auto primal = [&](std::span<const double> w) {
    double reg = 0.0;
    for (double wk : w) reg += wk * wk;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = p.x.rows[i].dot(w.first(d)) + w[d];
      loss += p.weight[i] * std::max(0.0, 1.0 - p.sign[i] * f);
    }
    return 0.5 * reg + C * loss;
  };

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> w(d + 1);
  std::size_t t = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto& xi = p.x.rows[i];
      const double margin = p.sign[i] * scale * (xi.dot(v) + v[d]);
      if (t == 1) {
        std::fill(v.begin(), v.end(), 0.0);
        scale = 1.0;
        v_norm2 = 0.0;
      } else {
        scale *= 1.0 - 1.0 / static_cast<double>(t);
      }
      if (margin < 1.0) {
        const double a = eta * p.weight[i] * p.sign[i] / scale;
        double vx = v[d];
        for (std::size_t k = 0; k < xi.indices.size(); ++k) vx += v[xi.indices[k]] * xi.values[k];
        v_norm2 += 2.0 * a * vx + a * a * (xi.squared_norm() + 1.0);
        for (std::size_t k = 0; k < xi.indices.size(); ++k) v[xi.indices[k]] += a * xi.values[k];
        v[d] += a;
      }
      const double w_norm = std::abs(scale) * std::sqrt(std::max(0.0, v_norm2));
      if (w_norm > radius) scale *= radius / w_norm;
      if (std::abs(scale) < 1e-9) {
        for (double& vk : v) vk *= scale;
        v_norm2 *= scale * scale;
        scale = 1.0;
      }
    }
    for (std::size_t k = 0; k <= d; ++k) w[k] = scale * v[k];
    const double obj = primal(w);
    if (!have_best || obj < best_objective) {
      best = w;
      best_objective = obj;
      have_best = true;
    }
    if (raw_trace) raw_trace->push_back(obj);
    if (trace) trace->push_back(best_objective);
  }
  machine.weights.assign(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(d));
  machine.bias = best[d];
}

void fit_dual(const SubProblem& p, const KernelSpec& spec, int epochs, std::uint64_t seed, BinarySvm& machine,
              std::vector<double>* trace) {
  const std::size_t n = p.x.rows.size();
  KernelRows rows(spec, p.x);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> f(n, 0.0);  // f_j = sum_i alpha_i y_i K_ij
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = rows.diag(i);

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double max_violation = 0.0;
    for (std::size_t i : order) {
      if (diag[i] <= 0.0) continue;
      const double g = p.sign[i] * f[i] - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= p.bound[i]) pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (std::abs(pg) < 1e-12) continue;
      const double updated = std::clamp(alpha[i] - g / diag[i], 0.0, p.bound[i]);
      const double delta = updated - alpha[i];
      if (delta == 0.0) continue;
      alpha[i] = updated;
      const auto k = rows.row(i);
      const double step = delta * p.sign[i];
      for (std::size_t j = 0; j < n; ++j) f[j] += step * k[j];
    }
    if (trace) {
      double dual = 0.0;
      for (std::size_t i = 0; i < n; ++i) dual += alpha[i] - 0.5 * alpha[i] * p.sign[i] * f[i];
      trace->push_back(dual);
    }
    if (max_violation < kDualTolerance) break;
  }

  double residual = 0.0;
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0.0) {
      machine.support.rows.push_back(p.x.rows[i]);
      machine.dual_coef.push_back(alpha[i] * p.sign[i]);
      machine.alpha_bound.push_back(p.bound[i]);
      if (alpha[i] < p.bound[i]) {
        residual += p.sign[i] - f[i];
        ++free_count;
      }
    }
  }
  machine.support.cols = p.x.cols;
  machine.bias = free_count > 0 ? residual / static_cast<double>(free_count) : 0.0;
}

}  // namespace

KernelKind parse_kernel_kind(std::string_view s) {
  if (s == "linear") return KernelKind::linear;
  if (s == "poly" || s == "polynomial") return KernelKind::polynomial;
  if (s == "rbf") return KernelKind::rbf;
  if (s == "sigmoid") return KernelKind::sigmoid;
  throw UsageError("unknown kernel: " + std::string(s));
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::rbf: return "rbf";
    case KernelKind::sigmoid: return "sigmoid";
  }
  return "?";
}

KernelSpec resolve_kernel(KernelSpec spec, const SparseMatrix& x_train) {
  const double d = static_cast<double>(std::max<std::size_t>(x_train.cols, 1));
  switch (spec.gamma_mode) {
    case GammaMode::auto_:
      spec.gamma = 1.0 / d;
      break;
    case GammaMode::scale: {
      const double count = d * static_cast<double>(x_train.rows.size());
      double sum = 0.0, sum2 = 0.0;
      for (const auto& row : x_train.rows) {
        for (double v : row.values) {
          sum += v;
          sum2 += v * v;
        }
      }
      const double mean = count > 0 ? sum / count : 0.0;
      const double var = count > 0 ? sum2 / count - mean * mean : 0.0;
      spec.gamma = var > 0.0 ? 1.0 / (d * var) : 1.0;
      break;
    }
    case GammaMode::value:
      if (!(spec.gamma > 0.0)) throw UsageError("explicit gamma must be positive");
      break;
  }
  return spec;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z) {
  if (x.size() != z.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
  check_spec(spec);
  double dot = 0.0, xx = 0.0, zz = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    dot += x[k] * z[k];
    xx += x[k] * x[k];
    zz += z[k] * z[k];
  }
  if (spec.kind == KernelKind::rbf) {
    double dist = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) dist += (x[k] - z[k]) * (x[k] - z[k]);
    return std::exp(-spec.gamma * dist);
  }
  return apply_kernel(spec, dot, xx, zz);
}

double kernel_eval(const KernelSpec& spec, const SparseVector& x, const SparseVector& z) {
  check_spec(spec);
  return apply_kernel(spec, x.dot(z), x.squared_norm(), z.squared_norm());
}

DenseMatrix gram_matrix(const KernelSpec& spec, const SparseMatrix& x) {
  check_spec(spec);
  const std::size_t n = x.rows.size();
  const auto norms = row_norms(x);
  DenseMatrix k(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = apply_kernel(spec, x.rows[i].dot(x.rows[j]), norms[i], norms[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

DenseMatrix gram_matrix_serial(const KernelSpec& spec, const SparseMatrix& x) {
  check_spec(spec);
  const std::size_t n = x.rows.size();
  const auto norms = row_norms(x);
  DenseMatrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = apply_kernel(spec, x.rows[i].dot(x.rows[j]), norms[i], norms[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

SvmModel fit_svm(const SparseMatrix& x, std::span<const LabelId> y, std::size_t num_classes,
                 const SvmConfig& config, SvmTrace* trace) {
  if (x.rows.size() != y.size()) throw std::invalid_argument("fit_svm: X and y differ in length");
  if (!(config.C > 0)) throw UsageError("SVM C must be positive");
  require_finite(x);
  const auto counts = class_counts(y, num_classes);
  std::vector<LabelId> present;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] > 0) present.push_back(static_cast<LabelId>(k));
  }
  if (present.size() < 2) throw DataError("fit_svm: at least two classes must be present");

  SvmModel model;
  model.kernel = resolve_kernel(config.kernel, x);
  model.C = config.C;
  model.num_classes = num_classes;
  model.dim = x.cols;
  model.class_weights = class_weights(y, num_classes, config.class_weight);

  for (std::size_t a = 0; a < present.size(); ++a) {
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      BinarySvm m;
      m.negative_class = present[a];
      m.positive_class = present[b];
      model.machines.push_back(std::move(m));
    }
  }

  const bool linear = model.kernel.kind == KernelKind::linear;
  const int epochs = config.epochs > 0 ? config.epochs : (linear ? kLinearEpochs : kDualEpochs);
  const std::size_t machines = model.machines.size();
  std::vector<std::vector<double>> raw(machines), kept(machines);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t mi = 0; mi < machines; ++mi) {
    BinarySvm& m = model.machines[mi];
    SubProblem p;
    p.x.cols = x.cols;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != m.negative_class && y[i] != m.positive_class) continue;
      p.x.rows.push_back(x.rows[i]);
      p.sign.push_back(y[i] == m.positive_class ? 1 : -1);
      p.weight.push_back(model.class_weights[y[i]]);
      p.bound.push_back(config.C * model.class_weights[y[i]]);
    }
    const std::uint64_t seed = child_seed(config.seed, mi);
    if (linear) {
      fit_linear_primal(p, config.C, epochs, seed, m, &raw[mi], &kept[mi]);
    } else {
      fit_dual(p, model.kernel, epochs, seed, m, &kept[mi]);
      raw[mi] = kept[mi];
    }
  }
  if (trace) {
    trace->raw_objective = std::move(raw);
    trace->objective = std::move(kept);
  }
  return model;
}

double decision_value(const SvmModel& model, const BinarySvm& machine, const SparseVector& x) {
  if (!x.indices.empty() && x.indices.back() >= model.dim) {
    throw std::invalid_argument("decision_function: feature index beyond model dimension");
  }
  if (model.kernel.kind == KernelKind::linear) return x.dot(machine.weights) + machine.bias;
  const double xx = x.squared_norm();
  double f = machine.bias;
  for (std::size_t s = 0; s < machine.support.rows.size(); ++s) {
    const auto& sv = machine.support.rows[s];
    f += machine.dual_coef[s] * apply_kernel(model.kernel, sv.dot(x), sv.squared_norm(), xx);
  }
  return f;
}

std::vector<double> decision_function(const SvmModel& model, const SparseVector& x) {
  std::vector<double> out;
  out.reserve(model.machines.size());
  for (const auto& m : model.machines) out.push_back(decision_value(model, m, x));
  return out;
}

LabelId predict(const SvmModel& model, const SparseVector& x) {
  std::vector<double> votes(model.num_classes, 0.0);
  const auto margins = decision_function(model, x);
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const auto& m = model.machines[i];
    votes[margins[i] >= 0.0 ? m.positive_class : m.negative_class] += 1.0;
  }
  return static_cast<LabelId>(argmax(votes));
}

std::vector<double> class_scores(const SvmModel& model, const SparseVector& x) {
  const auto margins = decision_function(model, x);
  if (model.num_classes == 2 && model.machines.size() == 1) return {-margins[0], margins[0]};
  std::vector<double> votes(model.num_classes, 0.0);
  std::vector<double> confidence(model.num_classes, 0.0);
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const auto& m = model.machines[i];
    votes[margins[i] >= 0.0 ? m.positive_class : m.negative_class] += 1.0;
    confidence[m.positive_class] += margins[i];
    confidence[m.negative_class] -= margins[i];
  }
  for (std::size_t k = 0; k < votes.size(); ++k) {
    votes[k] += confidence[k] / (3.0 * (std::abs(confidence[k]) + 1.0));
  }
  return votes;
}

double hinge_objective(std::span<const double> w, const DenseMatrix& x, std::span<const int> y, double C,
                       std::span<const double> sample_weights) {
  const std::size_t d = x.cols();
  if (w.size() != d + 1) throw std::invalid_argument("hinge_objective: w must have D + 1 entries");
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double f = w[d];
    for (std::size_t k = 0; k < d; ++k) f += w[k] * x(i, k);
    loss += sample_weights[i] * std::max(0.0, 1.0 - y[i] * f);
  }
  return 0.5 * reg + C * loss;
}

std::vector<double> hinge_subgradient(std::span<const double> w, const DenseMatrix& x, std::span<const int> y,
                                      double C, std::span<const double> sample_weights) {
  const std::size_t d = x.cols();
  if (w.size() != d + 1) throw std::invalid_argument("hinge_subgradient: w must have D + 1 entries");
  std::vector<double> g(w.begin(), w.end());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double f = w[d];
    for (std::size_t k = 0; k < d; ++k) f += w[k] * x(i, k);
    if (y[i] * f < 1.0) {
      const double s = C * sample_weights[i] * y[i];
      for (std::size_t k = 0; k < d; ++k) g[k] -= s * x(i, k);
      g[d] -= s;
    }
  }
  return g;
}

namespace {

nlohmann::json sparse_to_json(const SparseMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : m.rows) rows.push_back({{"i", r.indices}, {"v", r.values}});
  return {{"cols", m.cols}, {"rows", rows}};
}

SparseMatrix sparse_from_json(const nlohmann::json& j) {
  SparseMatrix m;
  m.cols = j.at("cols").get<std::size_t>();
  for (const auto& r : j.at("rows")) {
    m.rows.push_back({r.at("i").get<std::vector<std::uint32_t>>(), r.at("v").get<std::vector<double>>()});
  }
  return m;
}

std::string_view gamma_mode_name(GammaMode m) {
  switch (m) {
    case GammaMode::scale: return "scale";
    case GammaMode::auto_: return "auto";
    case GammaMode::value: return "value";
  }
  return "?";
}

GammaMode parse_gamma_mode(std::string_view s) {
  if (s == "scale") return GammaMode::scale;
  if (s == "auto") return GammaMode::auto_;
  if (s == "value") return GammaMode::value;
  throw DataError("unknown gamma mode: " + std::string(s));
}

}  // namespace

nlohmann::json to_json(const SvmModel& model) {
  nlohmann::json machines = nlohmann::json::array();
  for (const auto& m : model.machines) {
    nlohmann::json jm = {{"classes", {m.negative_class, m.positive_class}}, {"bias", m.bias}};
    if (model.kernel.kind == KernelKind::linear) {
      jm["weights"] = m.weights;
    } else {
      jm["support"] = sparse_to_json(m.support);
      jm["dual_coef"] = m.dual_coef;
      jm["alpha_bound"] = m.alpha_bound;
    }
    machines.push_back(std::move(jm));
  }
  const auto& k = model.kernel;
  return {{"kernel",
           {{"kind", to_string(k.kind)},
            {"gamma_mode", gamma_mode_name(k.gamma_mode)},
            {"gamma", k.gamma},
            {"degree", k.degree},
            {"coef0", k.coef0},
            {"alpha", k.alpha}}},
          {"C", model.C},
          {"num_classes", model.num_classes},
          {"dim", model.dim},
          {"class_weights", model.class_weights},
          {"machines", machines}};
}

SvmModel svm_from_json(const nlohmann::json& j) {
  SvmModel model;
  const auto& k = j.at("kernel");
  model.kernel.kind = parse_kernel_kind(k.at("kind").get<std::string>());
  model.kernel.gamma_mode = parse_gamma_mode(k.at("gamma_mode").get<std::string>());
  model.kernel.gamma = k.at("gamma").get<double>();
  model.kernel.degree = k.at("degree").get<int>();
  model.kernel.coef0 = k.at("coef0").get<double>();
  model.kernel.alpha = k.at("alpha").get<double>();
  model.C = j.at("C").get<double>();
  model.num_classes = j.at("num_classes").get<std::size_t>();
  model.dim = j.at("dim").get<std::size_t>();
  model.class_weights = j.at("class_weights").get<std::vector<double>>();
  for (const auto& jm : j.at("machines")) {
    BinarySvm m;
    const auto classes = jm.at("classes").get<std::vector<LabelId>>();
    m.negative_class = classes.at(0);
    m.positive_class = classes.at(1);
    m.bias = jm.at("bias").get<double>();
    if (model.kernel.kind == KernelKind::linear) {
      m.weights = jm.at("weights").get<std::vector<double>>();
    } else {
      m.support = sparse_from_json(jm.at("support"));
      m.dual_coef = jm.at("dual_coef").get<std::vector<double>>();
      m.alpha_bound = jm.at("alpha_bound").get<std::vector<double>>();
    }
    model.machines.push_back(std::move(m));
  }
  return model;
}

}  // namespace mhc
