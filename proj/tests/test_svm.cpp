#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "mhc/svm.hpp"
#include "support.hpp"

using namespace mhc;

namespace {

KernelSpec spec(KernelKind kind, double gamma = 0.5) {
  KernelSpec s;
  s.kind = kind;
  s.gamma_mode = GammaMode::value;
  s.gamma = gamma;
  return s;
}

double min_eigenvalue(const DenseMatrix& k) {
  Eigen::MatrixXd m(k.rows(), k.cols());
  for (std::size_t i = 0; i < k.rows(); ++i) {
    for (std::size_t j = 0; j < k.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k(i, j);
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
}

std::size_t training_errors(const SvmModel& m, const SparseMatrix& x, std::span<const LabelId> y) {
  std::size_t errors = 0;
  for (std::size_t i = 0; i < y.size(); ++i) errors += predict(m, x.rows[i]) != y[i];
  return errors;
}

}  // namespace

TEST_CASE("kernel values") {
  std::vector<double> a{1, 2}, b{3, 4};
  CHECK(kernel_eval(spec(KernelKind::linear), a, b) == 11.0);
  CHECK(kernel_eval(spec(KernelKind::rbf), a, a) == 1.0);
  CHECK(kernel_eval(spec(KernelKind::rbf, 0.1), a, b) == doctest::Approx(std::exp(-0.8)));
  auto poly = spec(KernelKind::polynomial, 1.0);
  poly.degree = 2;
  poly.coef0 = 1.0;
  std::vector<double> e1{1, 0}, ones{1, 1};
  CHECK(kernel_eval(poly, e1, ones) == doctest::Approx(4.0));
  auto sig = spec(KernelKind::sigmoid);
  sig.alpha = 0.5;
  sig.coef0 = -1.0;
  CHECK(kernel_eval(sig, a, b) == doctest::Approx(std::tanh(0.5 * 11.0 - 1.0)));
  std::vector<double> short_v{1};
  CHECK_THROWS_AS(kernel_eval(spec(KernelKind::linear), a, short_v), std::invalid_argument);
  KernelSpec unresolved;
  CHECK_THROWS(kernel_eval(unresolved, a, b));

  // Sparse and dense paths agree.
  Rng rng(6);
  const auto x = test::random_sparse(10, 5, 0.5, rng);
  const auto dx = to_dense(x);
  for (auto kind : {KernelKind::linear, KernelKind::polynomial, KernelKind::rbf, KernelKind::sigmoid}) {
    auto s = spec(kind, 0.3);
    s.coef0 = 0.5;
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 10; ++j) {
        CHECK(kernel_eval(s, x.rows[i], x.rows[j]) == doctest::Approx(kernel_eval(s, dx.row(i), dx.row(j))));
      }
    }
  }
}

TEST_CASE("gamma resolution") {
  DenseMatrix d(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 3.0;
  const auto x = to_sparse(d);
  KernelSpec s;
  // Entries 1, 0, 0, 3: mean 1, variance 1.5.
  CHECK(resolve_kernel(s, x).gamma == doctest::Approx(1.0 / (2 * 1.5)));
  s.gamma_mode = GammaMode::auto_;
  CHECK(resolve_kernel(s, x).gamma == doctest::Approx(0.5));
  s.gamma_mode = GammaMode::value;
  s.gamma = -1.0;
  CHECK_THROWS_AS(resolve_kernel(s, x), UsageError);
}

TEST_CASE("gram matrices are symmetric and positive semidefinite") {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = test::random_sparse(25, 6, 0.6, rng);
    for (auto kind : {KernelKind::linear, KernelKind::rbf}) {
      const auto k = gram_matrix(spec(kind, 0.7), x);
      for (std::size_t i = 0; i < 25; ++i) {
        for (std::size_t j = 0; j < 25; ++j) CHECK(k(i, j) == k(j, i));
      }
      CHECK(min_eigenvalue(k) >= -1e-8);
    }
  }
}

TEST_CASE("hinge subgradient matches finite differences off the hinge") {
  Rng rng(12);
  std::size_t checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6, d = 3;
    DenseMatrix x(n, d);
    for (auto& v : x.data()) v = rng.uniform(-1, 1);
    std::vector<int> y(n);
    std::vector<double> sw(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.bernoulli(0.5) ? 1 : -1;
      sw[i] = rng.uniform(0.5, 2.0);
    }
    std::vector<double> w(d + 1);
    for (auto& v : w) v = rng.uniform(-1, 1);
    bool near_hinge = false;
    for (std::size_t i = 0; i < n; ++i) {
      double f = w[d];
      for (std::size_t k = 0; k < d; ++k) f += w[k] * x(i, k);
      near_hinge |= std::abs(1 - y[i] * f) <= 1e-3;
    }
    if (near_hinge) continue;
    const double C = rng.uniform(0.1, 5.0);
    const auto g = hinge_subgradient(w, x, y, C, sw);
    for (std::size_t k = 0; k <= d; ++k) {
      auto up = w, down = w;
      const double h = 1e-7;
      up[k] += h;
      down[k] -= h;
      const double fd = (hinge_objective(up, x, y, C, sw) - hinge_objective(down, x, y, C, sw)) / (2 * h);
      CHECK(test::rel_error(fd, g[k]) < 1e-5);
    }
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("linear kernel separates a separable toy set") {
  DenseMatrix d(8, 2);
  std::vector<LabelId> y(8);
  const double pts[8][2] = {{0, 0}, {1, 0}, {0, 1}, {0.5, 0.5}, {3, 3}, {4, 3}, {3, 4}, {3.5, 3.5}};
  for (std::size_t i = 0; i < 8; ++i) {
    d(i, 0) = pts[i][0];
    d(i, 1) = pts[i][1];
    y[i] = i >= 4;
  }
  const auto x = to_sparse(d);
  SvmConfig cfg;
  cfg.C = 10;
  cfg.kernel = spec(KernelKind::linear);
  SvmTrace trace;
  const auto m = fit_svm(x, y, 2, cfg, &trace);
  CHECK(training_errors(m, x, y) == 0);
  REQUIRE(trace.objective.size() == 1);
  for (std::size_t e = 1; e < trace.objective[0].size(); ++e) CHECK(trace.objective[0][e] <= trace.objective[0][e - 1]);
  for (std::size_t i = 0; i < 8; ++i) {
    const double f = decision_function(m, x.rows[i])[0];
    CHECK(predict(m, x.rows[i]) == (f >= 0 ? 1u : 0u));
  }
}

TEST_CASE("rbf kernel fits XOR, checked by direct kernel expansion") {
  DenseMatrix d(4, 2);
  const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (std::size_t i = 0; i < 4; ++i) {
    d(i, 0) = pts[i][0];
    d(i, 1) = pts[i][1];
  }
  const std::vector<LabelId> y{0, 0, 1, 1};
  const auto x = to_sparse(d);
  SvmConfig cfg;
  cfg.C = 10;
  cfg.kernel = spec(KernelKind::rbf, 1.0);
  const auto m = fit_svm(x, y, 2, cfg);
  const auto& mach = m.machines.at(0);
  for (std::size_t i = 0; i < 4; ++i) {
    double f = mach.bias;
    for (std::size_t s = 0; s < mach.support.size(); ++s) {
      f += mach.dual_coef[s] * std::exp(-1.0 * (d.row(i)[0] - to_dense(mach.support)(s, 0)) *
                                               (d.row(i)[0] - to_dense(mach.support)(s, 0)) -
                                        1.0 * (d.row(i)[1] - to_dense(mach.support)(s, 1)) *
                                            (d.row(i)[1] - to_dense(mach.support)(s, 1)));
    }
    CHECK(f == doctest::Approx(decision_value(m, mach, x.rows[i])));
    CHECK((f >= 0) == (y[i] == 1));
  }
  for (std::size_t s = 0; s < mach.dual_coef.size(); ++s) {
    CHECK(std::abs(mach.dual_coef[s]) <= mach.alpha_bound[s] + 1e-12);
    CHECK(mach.alpha_bound[s] == doctest::Approx(10.0));
  }
}

TEST_CASE("balanced weights scale the box constraint") {
  Rng rng(2);
  const auto x = test::random_sparse(30, 4, 0.8, rng);
  std::vector<LabelId> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = i < 10;
  SvmConfig cfg;
  cfg.C = 2.0;
  cfg.class_weight = ClassWeightMode::balanced;
  cfg.kernel = spec(KernelKind::rbf, 1.0);
  const auto m = fit_svm(x, y, 2, cfg);
  for (std::size_t s = 0; s < m.machines[0].dual_coef.size(); ++s) {
    const double bound = m.machines[0].alpha_bound[s];
    CHECK((bound == doctest::Approx(2.0 * 30 / 20) || bound == doctest::Approx(2.0 * 30 / 40)));
    CHECK(std::abs(m.machines[0].dual_coef[s]) <= bound + 1e-12);
  }
}

TEST_CASE("one-vs-one has K(K-1)/2 machines and votes") {
  Rng rng(4);
  const auto x = test::random_sparse(30, 3, 1.0, rng);
  const auto y = test::random_labels(30, 3, rng);
  SvmConfig cfg;
  cfg.kernel = spec(KernelKind::rbf, 1.0);
  const auto m = fit_svm(x, y, 3, cfg);
  REQUIRE(m.machines.size() == 3);
  CHECK(m.machines[0].negative_class == 0);
  CHECK(m.machines[0].positive_class == 1);
  CHECK(m.machines[2].negative_class == 1);
  CHECK(m.machines[2].positive_class == 2);

  const auto y4 = test::random_labels(40, 4, rng);
  const auto x4 = test::random_sparse(40, 3, 1.0, rng);
  CHECK(fit_svm(x4, y4, 4, cfg).machines.size() == 6);
}

TEST_CASE("hand-built machines: boundary, scaling and voting") {
  SvmModel m;
  m.kernel = spec(KernelKind::linear);
  m.num_classes = 2;
  m.dim = 2;
  BinarySvm mach;
  mach.weights = {1.0, -1.0};
  mach.bias = 0.0;
  m.machines = {mach};
  SparseVector on_plane{{0, 1}, {2.0, 2.0}};
  CHECK(decision_function(m, on_plane)[0] == 0.0);
  CHECK(predict(m, on_plane) == 1);
  const auto cs = class_scores(m, on_plane);
  CHECK(cs[0] == -cs[1]);

  // Dual machine: scaling coefficients and bias by c > 0 keeps every prediction.
  SvmModel dual;
  dual.kernel = spec(KernelKind::rbf, 0.8);
  dual.num_classes = 2;
  dual.dim = 2;
  BinarySvm dm;
  Rng rng(8);
  dm.support = test::random_sparse(5, 2, 1.0, rng);
  for (int i = 0; i < 5; ++i) dm.dual_coef.push_back(rng.uniform(-1, 1));
  dm.bias = 0.1;
  dual.machines = {dm};
  SvmModel scaled = dual;
  for (double& a : scaled.machines[0].dual_coef) a *= 3.5;
  scaled.machines[0].bias *= 3.5;
  const auto probes = test::random_sparse(50, 2, 1.0, rng);
  for (const auto& p : probes.rows) CHECK(predict(dual, p) == predict(scaled, p));

  // Three classes; A beats B, A beats C, B beats C gives A.
  SvmModel three;
  three.kernel = spec(KernelKind::linear);
  three.num_classes = 3;
  three.dim = 1;
  auto make = [](LabelId neg, LabelId pos, double b) {
    BinarySvm s;
    s.negative_class = neg;
    s.positive_class = pos;
    s.weights = {0.0};
    s.bias = b;
    return s;
  };
  three.machines = {make(0, 1, -1), make(0, 2, -1), make(1, 2, -1)};
  SparseVector any{{0}, {1.0}};
  CHECK(predict(three, any) == 0);
  // A cycle gives one vote each; the lowest id wins.
  three.machines = {make(0, 1, 1), make(0, 2, -1), make(1, 2, 1)};
  CHECK(predict(three, any) == 0);
  const auto scores = class_scores(three, any);
  CHECK(scores.size() == 3);
}

TEST_CASE("svm errors and json") {
  SparseMatrix x = to_sparse(DenseMatrix(3, 2, 1.0));
  std::vector<LabelId> one{1, 1, 1};
  CHECK_THROWS(fit_svm(x, one, 2, {}));
  Rng rng(3);
  const auto xs = test::random_sparse(20, 4, 0.7, rng);
  const auto y = test::random_labels(20, 3, rng);
  SvmConfig cfg;
  const auto m = fit_svm(xs, y, 3, cfg);
  const auto back = svm_from_json(to_json(m));
  for (const auto& r : xs.rows) CHECK(decision_function(m, r) == decision_function(back, r));
  cfg.kernel.kind = KernelKind::linear;
  const auto lm = fit_svm(xs, y, 3, cfg);
  const auto lback = svm_from_json(to_json(lm));
  for (const auto& r : xs.rows) CHECK(decision_function(lm, r) == decision_function(lback, r));
}
