#include <limits>

#include "doctest.h"
#include "mhc/common.hpp"
#include "support.hpp"

using namespace mhc;

TEST_CASE("rng streams are reproducible and child seeds differ") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(child_seed(1, 0) != child_seed(1, 1));
  CHECK(child_seed(1, 0) != child_seed(2, 0));
  CHECK(child_seed(9, 4) == child_seed(9, 4));
}

TEST_CASE("uniform_index stays in range and covers it") {
  Rng rng(5);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_index(7);
    REQUIRE(v < 7);
    ++seen[v];
  }
  for (int c : seen) CHECK(c > 200);
  CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(3);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  rng.shuffle(v);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("class weights") {
  std::vector<LabelId> even(100);
  for (std::size_t i = 0; i < 100; ++i) even[i] = i < 50 ? 0 : 1;
  auto w = class_weights(even, 2, ClassWeightMode::balanced);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(1.0));

  std::vector<LabelId> skewed(100);
  for (std::size_t i = 0; i < 100; ++i) skewed[i] = i < 75 ? 0 : 1;
  w = class_weights(skewed, 2, ClassWeightMode::balanced);
  CHECK(w[0] == doctest::Approx(100.0 / 150.0));
  CHECK(w[1] == doctest::Approx(2.0));

  w = class_weights(skewed, 3, ClassWeightMode::none);
  CHECK(w == std::vector<double>{1.0, 1.0, 1.0});
  CHECK_THROWS_AS(class_weights(skewed, 3, ClassWeightMode::balanced), DataError);
  CHECK(parse_class_weight("balanced") == ClassWeightMode::balanced);
  CHECK_THROWS_AS(parse_class_weight("heavy"), UsageError);
}

TEST_CASE("argmax ties go to the lowest index") {
  std::vector<double> v{1.0, 3.0, 3.0, 2.0};
  CHECK(argmax(v) == 1);
}

TEST_CASE("sparse vector helpers") {
  std::vector<double> dense{0.0, 2.0, 0.0, -1.0};
  const auto s = to_sparse(std::span<const double>(dense));
  CHECK(s.indices == std::vector<std::uint32_t>{1, 3});
  CHECK(s.squared_norm() == doctest::Approx(5.0));
  CHECK(s.dot(std::span<const double>(dense)) == doctest::Approx(5.0));
  CHECK(s.get(1) == 2.0);
  CHECK(s.get(2) == 0.0);
  CHECK(s.get(9) == 0.0);

  Rng rng(11);
  const auto x = test::random_sparse(12, 6, 0.4, rng);
  const auto back = to_sparse(to_dense(x));
  for (std::size_t r = 0; r < x.size(); ++r) {
    CHECK(back.rows[r].indices == x.rows[r].indices);
    CHECK(back.rows[r].values == x.rows[r].values);
    for (std::size_t q = 0; q < x.size(); ++q) {
      double expect = 0.0;
      for (std::size_t c = 0; c < 6; ++c) expect += to_dense(x)(r, c) * to_dense(x)(q, c);
      CHECK(x.rows[r].dot(x.rows[q]) == doctest::Approx(expect));
    }
  }
}

TEST_CASE("require_finite rejects NaN and infinity") {
  DenseMatrix x(2, 2, 1.0);
  CHECK_NOTHROW(require_finite(x));
  x(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(require_finite(x), DataError);
  SparseMatrix s;
  s.cols = 1;
  s.rows.push_back({{0}, {std::numeric_limits<double>::infinity()}});
  CHECK_THROWS_AS(require_finite(s), DataError);
}
