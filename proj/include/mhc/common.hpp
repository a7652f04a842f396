#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mhc {

using LabelId = std::uint32_t;
using TokenList = std::vector<std::string>;

// Bad input data: malformed CSV, unknown labels, non-finite features. CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad command line or configuration. CLI exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every trial of a search failed. CLI exit code 3.
struct AllTrialsFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sparse row: strictly increasing column ids with matching non-zero values.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  double squared_norm() const;
  double dot(std::span<const double> dense) const;
  double dot(const SparseVector& other) const;
  /// Value at a column id; 0 when not stored.
  double get(std::uint32_t index) const;
};

struct SparseMatrix {
  std::size_t cols = 0;
  std::vector<SparseVector> rows;

  std::size_t size() const { return rows.size(); }
};

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix to_dense(const SparseMatrix& x);
SparseMatrix to_sparse(const DenseMatrix& x);
SparseVector to_sparse(std::span<const double> x);

/// Throws DataError if any stored value is NaN or infinite.
void require_finite(const SparseMatrix& x);
void require_finite(const DenseMatrix& x);

// Portable random stream. The engine is std::mt19937_64; the distributions are
// implemented here so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent child seed for a numbered stream under a parent seed.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream);

enum class ClassWeightMode { none, balanced };

ClassWeightMode parse_class_weight(std::string_view s);
std::string_view to_string(ClassWeightMode mode);

/// none: all ones. balanced: w_k = N / (K * N_k); every class must be present.
std::vector<double> class_weights(std::span<const LabelId> labels, std::size_t num_classes,
                                  ClassWeightMode mode);

std::vector<std::size_t> class_counts(std::span<const LabelId> labels, std::size_t num_classes);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace mhc
